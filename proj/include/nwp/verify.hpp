#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nwp/grid.hpp"
#include "nwp/splice.hpp"

namespace nwp {

/// Cosine-latitude weights over a mask, normalised to sum 1. Only the masked
/// points are stored, so metric loops skip everything else.
class LatWeights {
public:
    LatWeights(GridSpec grid, std::vector<std::size_t> points, std::vector<double> weights);

    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const std::size_t> points() const noexcept { return points_; }
    std::span<const double> weights() const noexcept { return weights_; }
    /// Dense nlat x nlon view (zero outside the mask).
    std::vector<double> dense() const;

private:
    GridSpec grid_;
    std::vector<std::size_t> points_;
    std::vector<double> weights_;
};

/// Throws EmptyMaskError when the mask selects nothing. Masks lying entirely
/// on pole rows (cos = 0) fall back to uniform weights.
LatWeights lat_weights(const GridSpec& grid, const Mask& mask);

double rmse_weighted(const Field& forecast, const Field& truth, const LatWeights& weights);

/// Anomaly variances below this are treated as degenerate.
inline constexpr double kMinAnomalyVariance = 1e-30;

double acc_weighted(const Field& forecast, const Field& truth, const Field& clim, const LatWeights& weights);

/// ACC on precomputed anomalies aligned with weights.points().
double acc_from_anomalies(std::span<const double> forecast_anomaly, std::span<const double> truth_anomaly,
                          std::span<const double> weights);

// ---------------------------------------------------------------------------

enum class Metric { RMSE, ACC };

std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view text);

struct MetricRecord {
    TimePoint init_time{};
    std::string source_label;
    ChannelId channel;
    std::string region;
    int lead_hours = 0;
    Metric metric = Metric::RMSE;
    double value = 0.0;
};

/// Report ordering: source, canonical channel order, region, lead, metric.
bool record_less(const MetricRecord& a, const MetricRecord& b);
void sort_records(std::vector<MetricRecord>& records);

struct LeadState {
    int lead_hours;
    StateSet state;
};

struct LeadError {
    int lead_hours;
    std::string message;
};

struct Evaluation {
    std::vector<MetricRecord> records;
    std::vector<LeadError> errors;
};

/// Scores every forecast lead against the truth for that lead. A missing or
/// unusable truth records a LeadError and the remaining leads still run.
Evaluation evaluate_run(std::span<const LeadState> forecasts, const std::map<int, StateSet>& truths,
                        const StateSet& climatology, std::span<const NamedRegion> regions,
                        std::span<const ChannelId> report_channels);

std::vector<NamedRegion> default_regions();

}  // namespace nwp
