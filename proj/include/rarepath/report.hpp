#pragma once

#include "rarepath/policy.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rarepath {

/// Header `tau,mean_cost,std_err,normalized_cost`, fixed 6 decimals.
std::string cost_curve_csv(const CostCurve& curve);

/// Line chart of the normalized cost against tau, with the chosen threshold
/// marked. Plain SVG primitives.
std::string cost_curve_svg(const CostCurve& curve, double optimal_tau);

struct TracePoint {
    int day = 0;
    std::vector<int> observed_symptoms;  // observed on that day
    double prediction = 0.0;
};

/// Forest output from the first observed day to the horizon. Empty when the
/// trajectory has no observed symptom.
std::vector<TracePoint> prediction_trace(const Trajectory& trajectory, const Forest& forest);

/// Header `day,observed_symptoms,prediction`; symptom ids joined by ';'.
std::string trace_csv(const std::vector<TracePoint>& trace);

/// Writes `content` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rarepath
