#include "ikami/report.hpp"

#include <fstream>

#include "ikami/errors.hpp"

namespace ikami {

nlohmann::json eval_row_json(const EvalRow& row) {
    return nlohmann::json{{"epoch", row.epoch},
                          {"hit1", row.metrics.hit1},
                          {"hit10", row.metrics.hit10},
                          {"mrr", row.metrics.mrr},
                          {"mr", row.metrics.mr},
                          {"seeds_total", row.seeds_total},
                          {"seeds_bootstrapped", row.seeds_bootstrapped},
                          {"filled_source", row.filled_source},
                          {"filled_target", row.filled_target},
                          {"loss_t", row.loss_t},
                          {"loss_g", row.loss_g}};
}

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const EvalRow& row : history) rows.push_back(eval_row_json(row));
    nlohmann::json j{{"config", config},
                     {"history", rows},
                     {"final", eval_row_json(final_row)},
                     {"wall_seconds", wall_seconds}};
    if (recovery.gold_known)
        j["recovery"] = nlohmann::json{{"filled_source", recovery.filled_source},
                                       {"filled_target", recovery.filled_target},
                                       {"precision", recovery.precision},
                                       {"recall", recovery.recall}};
    return j;
}

void ExperimentReport::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report: " + path);
    out << to_json().dump(2) << '\n';
}

namespace {

void require(bool cond, const std::string& path) {
    if (!cond) throw ConfigError("report schema violation at " + path);
}

void check_metric_row(const nlohmann::json& row, const std::string& where) {
    require(row.is_object(), where);
    for (const char* key : {"epoch", "hit1", "hit10", "mrr", "mr", "seeds_total", "seeds_bootstrapped"})
        require(row.contains(key) && row.at(key).is_number(), where + "." + key);
    for (const char* key : {"hit1", "hit10", "mrr"}) {
        const double v = row.at(key).get<double>();
        require(v >= 0.0 && v <= 1.0, where + "." + key + " range");
    }
    require(row.at("mr").get<double>() >= 0.0, where + ".mr range");
    require(row.at("epoch").get<double>() >= 0.0, where + ".epoch range");
}

}  // namespace

void validate_report_json(const nlohmann::json& report) {
    require(report.is_object(), "$");
    require(report.contains("config") && report.at("config").is_object(), "$.config");
    require(report.contains("history") && report.at("history").is_array(), "$.history");
    for (std::size_t i = 0; i < report.at("history").size(); ++i)
        check_metric_row(report.at("history")[i], "$.history[" + std::to_string(i) + "]");
    require(report.contains("final"), "$.final");
    check_metric_row(report.at("final"), "$.final");
    require(report.contains("wall_seconds") && report.at("wall_seconds").is_number(), "$.wall_seconds");
    if (report.contains("recovery")) {
        const auto& r = report.at("recovery");
        for (const char* key : {"filled_source", "filled_target", "precision", "recall"})
            require(r.contains(key) && r.at(key).is_number(), std::string("$.recovery.") + key);
        require(r.at("precision").get<double>() >= 0.0 && r.at("precision").get<double>() <= 1.0,
                "$.recovery.precision range");
        require(r.at("recall").get<double>() >= 0.0 && r.at("recall").get<double>() <= 1.0,
                "$.recovery.recall range");
    }
}

void save_history_csv(const std::vector<EvalRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write history CSV: " + path);
    out << "epoch,hit1,hit10,mrr,mr,seeds_total,seeds_bootstrapped,filled_source,filled_target,loss_t,loss_g\n";
    out.precision(17);
    for (const EvalRow& r : history)
        out << r.epoch << ',' << r.metrics.hit1 << ',' << r.metrics.hit10 << ',' << r.metrics.mrr << ','
            << r.metrics.mr << ',' << r.seeds_total << ',' << r.seeds_bootstrapped << ',' << r.filled_source << ','
            << r.filled_target << ',' << r.loss_t << ',' << r.loss_g << '\n';
}

}  // namespace ikami
