#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace ikami {

// Everything a run needs, flat-keyed in JSON. Flags override file values in
// the CLI layer; the effective config is echoed into every report.
struct TrainingConfig {
    // data: either a synthetic pair or dataset paths
    bool synthetic = false;
    int synth_entities = 300;
    int synth_relations = 20;
    double synth_avg_degree = 6.0;
    double synth_removal_s = 0.15;
    double synth_removal_t = 0.15;
    double synth_seed_fraction = 0.2;
    std::string source_triples;
    std::string target_triples;
    std::string links;       // single gold file, split train/dev/test
    std::string seed_links;  // alternatively: explicit seed + eval files
    std::string eval_links;
    std::string vectors;     // optional word-vector file
    double split_train = 0.7;
    double split_dev = 0.1;
    double split_test = 0.2;

    // embedding dims
    int dim_t = 100;
    int dim_g = 300;
    int gnn_layers = 2;

    // transitivity channel
    double gamma_t = 1.0;
    double beta_tm = 50.0;
    double beta_tc = 1.0;
    double lr_t = 0.1;
    int k_neg_t = 5;
    int batch_size = 1000;

    // proximity channel
    double gamma_g = 1.0;
    double beta_g = 1.0;
    double lr_g = 0.0005;
    double leaky_slope = 0.05;
    int k_neg_g = 50;

    // fusion and schedule
    double beta_tg = 0.4;
    int eval_step = 10;
    int max_epochs = 100;
    int patience = 2;
    int nominate_c = -1;  // -1: 5% of |Vs|
    int nominate_n = 2;

    // recovery
    bool recovery = true;
    int rec_k_neg = 5;
    int rec_sample_size = 200;
    int rec_permanence = 3;
    int rec_start_epoch = 0;  // first epoch at which proposal sweeps may run
    double rec_lr = 0.001;    // detector MLP learning rate (kept low: a soft
                              // detector generalizes by embedding proximity)
    bool bce_negatives = false;

    // ablation switches
    bool transitivity_channel = true;
    bool proximity_channel = true;
    bool uniform_attention = false;
    bool seed_update = true;

    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
    static TrainingConfig load(const std::string& path);
};

// Reads IKAMI_THREADS (>=1); defaults to 1 for bit-reproducibility.
int threads_from_env();

}  // namespace ikami
