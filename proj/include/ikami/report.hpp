#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ikami/alignment.hpp"

namespace ikami {

struct EvalRow {
    int epoch = 0;
    EvalMetrics metrics;
    int seeds_total = 0;
    int seeds_bootstrapped = 0;
    int filled_source = 0;
    int filled_target = 0;
    double loss_t = 0.0;
    double loss_g = 0.0;
};

nlohmann::json eval_row_json(const EvalRow& row);

struct RecoveryReport {
    bool gold_known = false;
    int filled_source = 0;
    int filled_target = 0;
    double precision = 0.0;
    double recall = 0.0;
};

struct ExperimentReport {
    nlohmann::json config;
    std::vector<EvalRow> history;
    EvalRow final_row;        // best-dev state, test-set metrics
    RecoveryReport recovery;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
    void save(const std::string& path) const;
};

// Structural validation against the shape published in
// schemas/report.schema.json. Throws ConfigError with the offending path.
void validate_report_json(const nlohmann::json& report);

// CSV with one row per evaluation (epoch,hit1,hit10,mrr,mr,...).
void save_history_csv(const std::vector<EvalRow>& history, const std::string& path);

}  // namespace ikami
