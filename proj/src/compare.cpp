#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ghostdiff/experiment.hpp"
#include "json.hpp"

namespace ghostdiff {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("compare: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Pattern parse_pattern_tsv(const std::string& path) {
    std::istringstream in(slurp(path));
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("compare: '" + path + "' is empty");

    std::vector<double> x_mm, values, std_err;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        double x = 0.0, v = 0.0, se = 0.0;
        if (!(row >> x >> v >> se))
            throw std::invalid_argument("compare: '" + path + "' line " +
                                        std::to_string(line_no) +
                                        " is not 'x value std_err'");
        x_mm.push_back(x);
        values.push_back(v);
        std_err.push_back(se);
    }
    if (x_mm.size() < 2)
        throw std::invalid_argument("compare: '" + path + "' has fewer than two rows");

    Pattern p;
    p.axis.n = x_mm.size();
    p.axis.origin = x_mm.front() * 1000.0;
    p.axis.pitch = (x_mm.back() - x_mm.front()) * 1000.0 /
                   static_cast<double>(x_mm.size() - 1);
    if (!(p.axis.pitch > 0.0))
        throw std::invalid_argument("compare: '" + path +
                                    "' coordinates must increase");
    for (std::size_t i = 0; i < x_mm.size(); ++i) {
        const double expected = p.axis.coordinate(i);
        if (std::fabs(x_mm[i] * 1000.0 - expected) > 1e-6 * p.axis.pitch)
            throw std::invalid_argument("compare: '" + path +
                                        "' is not uniformly sampled");
    }
    p.values = std::move(values);
    p.std_err = std::move(std_err);
    return p;
}

struct PredictionFile {
    DiffractionPrediction prediction;
    double window_um = 0.0;
};

PredictionFile parse_prediction_json(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(slurp(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("compare: '" + path +
                                    "' is not valid JSON: " + e.what());
    }
    PredictionFile f;
    try {
        f.prediction.orders = j.at("orders").get<std::vector<int>>();
        f.prediction.eta = j.at("eta").get<std::vector<double>>();
        f.prediction.x = j.at("x_mm").get<std::vector<double>>();
        f.window_um = j.at("window_um").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("compare: '" + path +
                                    "' lacks a required field: " + e.what());
    }
    if (f.prediction.orders.size() != f.prediction.eta.size() ||
        f.prediction.orders.size() != f.prediction.x.size() ||
        f.prediction.orders.empty())
        throw std::invalid_argument("compare: '" + path +
                                    "' orders, eta, and x_mm must align");
    if (!(f.window_um > 0.0))
        throw std::invalid_argument("compare: '" + path +
                                    "' window_um must be positive");
    return f;
}

}  // namespace

CompareReport compare_with_reference(const std::string& pattern_file,
                                     const std::string& prediction_file,
                                     double tolerance) {
    if (tolerance < 0.0)
        throw std::invalid_argument("compare: tolerance must not be negative");

    CompareReport report;
    report.tolerance = tolerance;

    const Pattern pattern = parse_pattern_tsv(pattern_file);
    const PredictionFile pred = parse_prediction_json(prediction_file);

    std::size_t zero_pos = pred.prediction.orders.size();
    for (std::size_t k = 0; k < pred.prediction.orders.size(); ++k)
        if (pred.prediction.orders[k] == 0) zero_pos = k;
    if (zero_pos == pred.prediction.orders.size()) {
        report.problems.push_back("prediction lacks the zero order");
        report.pass = false;
        return report;
    }
    if (!(pred.prediction.eta[zero_pos] > 0.0)) {
        report.problems.push_back("predicted zero-order strength is zero");
        report.pass = false;
        return report;
    }

    PeakTable table;
    try {
        table = integrate_peaks(pattern, pred.prediction, pred.window_um);
    } catch (const std::exception& e) {
        report.problems.push_back(e.what());
        report.pass = false;
        return report;
    }

    bool pass = true;
    for (std::size_t k = 0; k < table.orders.size(); ++k) {
        CompareRow row;
        row.order = table.orders[k];
        row.predicted = pred.prediction.eta[k] / pred.prediction.eta[zero_pos];
        row.measured = table.ratio[k];
        if (row.predicted > 0.0)
            row.deviation = std::fabs(row.measured - row.predicted) / row.predicted;
        else
            row.deviation = std::fabs(row.measured);
        if (row.order != 0 && row.deviation > tolerance) pass = false;
        report.rows.push_back(row);
    }
    report.pass = pass;
    return report;
}

}  // namespace ghostdiff
