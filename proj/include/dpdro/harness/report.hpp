#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpdro/harness/experiment.hpp"

namespace dpdro::harness {

enum class ReportFormat { Csv, Json };

struct MetricStats {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation (n - 1)
    int count = 0;
};

struct MethodSummary {
    std::optional<MetricStats> testRisk;
    std::optional<MetricStats> rmse;
    std::optional<MetricStats> distanceToTruth;
    std::optional<MetricStats> coeffNorm;
};

std::map<std::string, MethodSummary> summarize(const std::vector<MetricsRow>& rows);

/// Serializes rows deterministically. CSV carries the rows under the fixed
/// header replicate,method,testRisk,rmse,distanceToTruth,coeffNorm (absent
/// metrics stay empty); JSON additionally carries the spec digest and the
/// per-method summary. Doubles round-trip exactly.
void emit_report(const std::vector<MetricsRow>& rows, ReportFormat format,
                 const std::string& path, const std::string& specDigest = "");

std::string render_rows_csv(const std::vector<MetricsRow>& rows);
std::string render_report_json(const std::vector<MetricsRow>& rows,
                               const std::string& specDigest);

std::vector<MetricsRow> load_rows_csv(const std::string& path);

} // namespace dpdro::harness
