#include "rarepath/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace rarepath {

namespace {

std::string format(const char* fmt, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, a);
    return buf;
}

}  // namespace

std::string cost_curve_csv(const CostCurve& curve) {
    std::string out = "tau,mean_cost,std_err,normalized_cost\n";
    char line[160];
    for (std::size_t j = 0; j < curve.taus.size(); ++j) {
        std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f,%.6f\n", curve.taus[j],
                      curve.mean_costs[j], curve.std_errs[j], curve.normalized_costs[j]);
        out += line;
    }
    return out;
}

std::string cost_curve_svg(const CostCurve& curve, double optimal_tau) {
    constexpr double kWidth = 640.0;
    constexpr double kHeight = 400.0;
    constexpr double kLeft = 60.0;
    constexpr double kRight = 20.0;
    constexpr double kTop = 20.0;
    constexpr double kBottom = 50.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto x_of = [&](double tau) { return kLeft + tau * plot_w; };
    const auto y_of = [&](double v) { return kTop + (1.0 - v) * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n";
    svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg += "<line x1=\"60\" y1=\"350\" x2=\"620\" y2=\"350\"/>\n";
    svg += "<line x1=\"60\" y1=\"20\" x2=\"60\" y2=\"350\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = k / 4.0;
        svg += "<line x1=\"" + format("%.2f", x_of(v)) + "\" y1=\"350\" x2=\"" +
               format("%.2f", x_of(v)) + "\" y2=\"355\"/>\n";
        svg += "<line x1=\"55\" y1=\"" + format("%.2f", y_of(v)) + "\" x2=\"60\" y2=\"" +
               format("%.2f", y_of(v)) + "\"/>\n";
    }
    svg += "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = k / 4.0;
        svg += "<text x=\"" + format("%.2f", x_of(v)) + "\" y=\"370\" text-anchor=\"middle\">" +
               format("%.2f", v) + "</text>\n";
        svg += "<text x=\"50\" y=\"" + format("%.2f", y_of(v) + 4.0) +
               "\" text-anchor=\"end\">" + format("%.2f", v) + "</text>\n";
    }
    svg += "<text x=\"340\" y=\"392\" text-anchor=\"middle\">threshold</text>\n";
    svg += "<text x=\"16\" y=\"185\" text-anchor=\"middle\" transform=\"rotate(-90 16 185)\">"
           "normalized expected cost</text>\n</g>\n";

    svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < curve.taus.size(); ++j) {
        if (j) svg += ' ';
        svg += format("%.2f", x_of(curve.taus[j])) + "," +
               format("%.2f", y_of(curve.normalized_costs[j]));
    }
    svg += "\"/>\n";
    svg += "<line x1=\"" + format("%.2f", x_of(optimal_tau)) + "\" y1=\"20\" x2=\"" +
           format("%.2f", x_of(optimal_tau)) +
           "\" y2=\"350\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>\n";
    svg += "</svg>\n";
    return svg;
}

std::vector<TracePoint> prediction_trace(const Trajectory& trajectory, const Forest& forest) {
    const auto series = prediction_series(trajectory, forest);
    std::vector<TracePoint> trace;
    if (series.empty()) return trace;
    const int first = *trajectory.first_observed_day;
    trace.reserve(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) {
        TracePoint point;
        point.day = first + static_cast<int>(k);
        for (std::size_t s = 0; s < trajectory.observed.size(); ++s) {
            if (trajectory.observed[s][static_cast<std::size_t>(point.day)]) {
                point.observed_symptoms.push_back(static_cast<int>(s));
            }
        }
        point.prediction = series[k];
        trace.push_back(std::move(point));
    }
    return trace;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
    std::string out = "day,observed_symptoms,prediction\n";
    for (const auto& point : trace) {
        out += std::to_string(point.day);
        out += ',';
        for (std::size_t k = 0; k < point.observed_symptoms.size(); ++k) {
            if (k) out += ';';
            out += std::to_string(point.observed_symptoms[k]);
        }
        out += ',';
        out += format("%.6f", point.prediction);
        out += '\n';
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace rarepath
