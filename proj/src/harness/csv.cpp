#include "dpdro/harness/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>

#include "dpdro/errors.hpp"
#include "dpdro/harness/standardize.hpp"

namespace dpdro::harness {

int CsvTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return static_cast<int>(j);
    return -1;
}

CsvTable parse_csv(std::istream& in) {
    // RFC 4180: quoted fields may contain commas, doubled quotes, newlines.
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool fieldStarted = false;
    int c;

    auto endField = [&] {
        record.push_back(std::move(field));
        field.clear();
        fieldStarted = false;
    };
    auto endRecord = [&] {
        endField();
        records.push_back(std::move(record));
        record.clear();
    };

    while ((c = in.get()) != std::char_traits<char>::eof()) {
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            if (!field.empty())
                throw ParseError("csv: stray quote inside unquoted field at record " +
                                 std::to_string(records.size() + 1));
            quoted = true;
            fieldStarted = true;
            break;
        case ',':
            endField();
            fieldStarted = false;
            break;
        case '\r':
            break; // handled with the following \n (or ignored)
        case '\n':
            endRecord();
            break;
        default:
            field.push_back(ch);
            fieldStarted = true;
        }
    }
    if (quoted) throw ParseError("csv: unterminated quoted field");
    if (fieldStarted || !field.empty() || !record.empty()) endRecord();

    if (records.empty()) throw ParseError("csv: empty file (header row required)");
    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != table.header.size())
            throw ParseError("csv: row " + std::to_string(i + 1) + " has " +
                             std::to_string(records[i].size()) + " cells, header has " +
                             std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[i]));
    }
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return parse_csv(in);
}

namespace {

double parse_cell(const std::string& cell, std::size_t row, const std::string& columnName) {
    const char* first = cell.data();
    const char* last = first + cell.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("csv: non-numeric cell '" + cell + "' at data row " +
                         std::to_string(row + 1) + ", column '" + columnName + "'");
    return value;
}

} // namespace

GroupedDataset ingest_csv(const std::string& path, const std::string& responseColumn,
                          const std::optional<std::string>& groupColumn, bool standardize) {
    const CsvTable table = read_csv(path);

    const int yCol = table.column(responseColumn);
    if (yCol < 0) throw ParseError("csv: missing response column '" + responseColumn + "'");
    int gCol = -1;
    if (groupColumn) {
        gCol = table.column(*groupColumn);
        if (gCol < 0) throw ParseError("csv: missing group column '" + *groupColumn + "'");
    }

    std::vector<int> featureCols;
    for (int j = 0; j < static_cast<int>(table.header.size()); ++j)
        if (j != yCol && j != gCol) featureCols.push_back(j);
    if (featureCols.empty()) throw ParseError("csv: no feature columns left");

    const auto n = table.rows.size();
    if (n == 0) throw ParseError("csv: no data rows");
    const auto d = featureCols.size();

    RowMatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    std::vector<std::string> groupOf(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        for (std::size_t k = 0; k < d; ++k) {
            const auto j = static_cast<std::size_t>(featureCols[k]);
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                parse_cell(row[j], i, table.header[j]);
        }
        y[static_cast<Eigen::Index>(i)] =
            parse_cell(row[static_cast<std::size_t>(yCol)], i, responseColumn);
        if (gCol >= 0) groupOf[i] = row[static_cast<std::size_t>(gCol)];
    }

    // {-1,+1} or {0,1} responses mean classification; 0 maps to -1.
    bool binary = true;
    bool sawZero = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) sawZero = true;
        if (y[i] != 0.0 && y[i] != 1.0 && y[i] != -1.0) {
            binary = false;
            break;
        }
    }
    const TaskKind task = binary ? TaskKind::BinaryLabel : TaskKind::Regression;
    if (binary && sawZero)
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] == 0.0) y[i] = -1.0;

    if (standardize) {
        Standardizer st;
        Dataset whole;
        whole.X = X;
        whole.y = y;
        whole.task = task;
        st.fit(whole);
        st.apply(whole);
        X = whole.X;
        y = whole.y;
    }

    GroupedDataset out;
    if (gCol < 0) {
        Dataset ds;
        ds.X = std::move(X);
        ds.y = std::move(y);
        ds.task = task;
        out.groups.push_back(std::move(ds));
    } else {
        // Groups ordered by first appearance of their label.
        std::vector<std::string> labels;
        std::map<std::string, std::size_t> indexOf;
        for (const auto& g : groupOf)
            if (indexOf.emplace(g, labels.size()).second) labels.push_back(g);
        std::vector<std::vector<Eigen::Index>> members(labels.size());
        for (std::size_t i = 0; i < n; ++i)
            members[indexOf[groupOf[i]]].push_back(static_cast<Eigen::Index>(i));
        Dataset whole;
        whole.X = std::move(X);
        whole.y = std::move(y);
        whole.task = task;
        for (const auto& rows : members) out.groups.push_back(whole.take(rows));
    }
    out.validate();
    return out;
}

} // namespace dpdro::harness
