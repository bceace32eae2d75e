#include "dpdro/harness/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpdro/errors.hpp"
#include "dpdro/harness/csv.hpp"

namespace dpdro::harness {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Accumulator {
public:
    void add(double v) {
        sum_ += v;
        sumSq_ += v * v;
        ++n_;
    }
    std::optional<MetricStats> stats() const {
        if (n_ == 0) return std::nullopt;
        MetricStats s;
        s.count = n_;
        s.mean = sum_ / n_;
        s.std = n_ > 1 ? std::sqrt(std::max(0.0, (sumSq_ - sum_ * sum_ / n_) / (n_ - 1))) : 0.0;
        return s;
    }

private:
    double sum_ = 0.0, sumSq_ = 0.0;
    int n_ = 0;
};

} // namespace

std::map<std::string, MethodSummary> summarize(const std::vector<MetricsRow>& rows) {
    struct Acc {
        Accumulator testRisk, rmse, distanceToTruth, coeffNorm;
    };
    std::map<std::string, Acc> byMethod;
    for (const auto& row : rows) {
        auto& acc = byMethod[row.method];
        acc.testRisk.add(row.testRisk);
        if (row.rmse) acc.rmse.add(*row.rmse);
        if (row.distanceToTruth) acc.distanceToTruth.add(*row.distanceToTruth);
        acc.coeffNorm.add(row.coeffNorm);
    }
    std::map<std::string, MethodSummary> out;
    for (const auto& [method, acc] : byMethod) {
        MethodSummary s;
        s.testRisk = acc.testRisk.stats();
        s.rmse = acc.rmse.stats();
        s.distanceToTruth = acc.distanceToTruth.stats();
        s.coeffNorm = acc.coeffNorm.stats();
        out[method] = s;
    }
    return out;
}

std::string render_rows_csv(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
    std::ostringstream out;
    out << "replicate,method,testRisk,rmse,distanceToTruth,coeffNorm\n";
    for (const auto& row : rows) {
        out << row.replicate << ',' << row.method << ',' << fmt(row.testRisk) << ','
            << (row.rmse ? fmt(*row.rmse) : "") << ','
            << (row.distanceToTruth ? fmt(*row.distanceToTruth) : "") << ','
            << fmt(row.coeffNorm) << '\n';
    }
    return out.str();
}

std::string render_report_json(const std::vector<MetricsRow>& rows,
                               const std::string& specDigest) {
    if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
    nlohmann::ordered_json doc;
    doc["spec_digest"] = specDigest;
    auto& list = doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json r;
        r["replicate"] = row.replicate;
        r["method"] = row.method;
        r["testRisk"] = row.testRisk;
        if (row.rmse) r["rmse"] = *row.rmse;
        if (row.distanceToTruth) r["distanceToTruth"] = *row.distanceToTruth;
        r["coeffNorm"] = row.coeffNorm;
        list.push_back(std::move(r));
    }
    auto& summary = doc["summary"] = nlohmann::ordered_json::object();
    for (const auto& [method, s] : summarize(rows)) {
        nlohmann::ordered_json m;
        auto put = [&m](const char* name, const std::optional<MetricStats>& stats) {
            if (!stats) return;
            m[name] = {{"mean", stats->mean}, {"std", stats->std}, {"count", stats->count}};
        };
        put("testRisk", s.testRisk);
        put("rmse", s.rmse);
        put("distanceToTruth", s.distanceToTruth);
        put("coeffNorm", s.coeffNorm);
        summary[method] = std::move(m);
    }
    return doc.dump(2) + "\n";
}

void emit_report(const std::vector<MetricsRow>& rows, ReportFormat format,
                 const std::string& path, const std::string& specDigest) {
    const std::string body = format == ReportFormat::Csv ? render_rows_csv(rows)
                                                         : render_report_json(rows, specDigest);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("emit_report: cannot open " + path + " for writing");
    out << body;
    if (!out) throw IoError("emit_report: write to " + path + " failed");
}

namespace {

double parse_double(const std::string& cell, const char* what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError(std::string("report: bad ") + what + " value '" + cell + "'");
    return v;
}

} // namespace

std::vector<MetricsRow> load_rows_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::vector<std::string> expected{"replicate", "method",          "testRisk",
                                            "rmse",      "distanceToTruth", "coeffNorm"};
    if (table.header != expected) throw ParseError("report: unexpected header in " + path);
    std::vector<MetricsRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& cells : table.rows) {
        MetricsRow row;
        row.replicate = static_cast<int>(parse_double(cells[0], "replicate"));
        row.method = cells[1];
        row.testRisk = parse_double(cells[2], "testRisk");
        if (!cells[3].empty()) row.rmse = parse_double(cells[3], "rmse");
        if (!cells[4].empty()) row.distanceToTruth = parse_double(cells[4], "distanceToTruth");
        row.coeffNorm = parse_double(cells[5], "coeffNorm");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace dpdro::harness
