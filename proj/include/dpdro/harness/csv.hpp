#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dpdro/dataset.hpp"

namespace dpdro::harness {

/// RFC 4180 table: header row plus string cells (quotes already resolved).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

/// Loads a CSV into a grouped dataset. responseColumn holds the target;
/// groupColumn (when given) partitions rows into groups ordered by first
/// appearance; every other column must be numeric and becomes a feature.
/// Responses in {-1, +1} (or {0, 1}, remapped) give a BinaryLabel task.
/// With standardize, features (and a regression response) are centered and
/// scaled to unit variance using the ingested rows' statistics.
GroupedDataset ingest_csv(const std::string& path, const std::string& responseColumn,
                          const std::optional<std::string>& groupColumn, bool standardize);

} // namespace dpdro::harness
