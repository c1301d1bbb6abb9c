#include "ikami/config.hpp"

#include <cstdlib>
#include <fstream>

#include "ikami/errors.hpp"

namespace ikami {

void TrainingConfig::validate() const {
    if (!synthetic && (source_triples.empty() || target_triples.empty()))
        throw ConfigError("either synthetic=true or source/target triple paths are required");
    if (!synthetic && links.empty() && seed_links.empty())
        throw ConfigError("a links file (or seed_links) is required for non-synthetic runs");
    if (synth_entities < 2) throw ConfigError("synth_entities must be at least 2");
    if (synth_relations < 1) throw ConfigError("synth_relations must be at least 1");
    if (synth_seed_fraction < 0.0 || synth_seed_fraction > 1.0) throw ConfigError("seed fraction must be in [0,1]");
    if (dim_t < 1 || dim_g < 1) throw ConfigError("embedding dims must be positive");
    if (gnn_layers < 1) throw ConfigError("gnn_layers must be at least 1");
    if (gamma_t <= 0.0 || gamma_g <= 0.0) throw ConfigError("margins must be positive");
    if (beta_tm < 0.0 || beta_tc < 0.0 || beta_g < 0.0) throw ConfigError("loss weights must be nonnegative");
    if (beta_tg < 0.0 || beta_tg > 1.0) throw ConfigError("beta_tg must be in [0,1]");
    if (lr_t <= 0.0 || lr_g <= 0.0) throw ConfigError("learning rates must be positive");
    if (k_neg_t < 1 || k_neg_g < 1 || rec_k_neg < 0) throw ConfigError("negative-sample counts are invalid");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (eval_step < 1) throw ConfigError("eval_step must be at least 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be nonnegative");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (nominate_n < 1) throw ConfigError("nominate_n must be at least 1");
    if (rec_sample_size < 1) throw ConfigError("rec_sample_size must be positive");
    if (rec_permanence < 0) throw ConfigError("rec_permanence must be nonnegative");
    if (rec_start_epoch < 0) throw ConfigError("rec_start_epoch must be nonnegative");
    if (rec_lr <= 0.0) throw ConfigError("rec_lr must be positive");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (!transitivity_channel && !proximity_channel)
        throw ConfigError("at least one channel must stay enabled");
    const double split_sum = split_train + split_dev + split_test;
    if (split_train < 0 || split_dev < 0 || split_test <= 0 || split_sum > 1.0 + 1e-9)
        throw ConfigError("link splits must be nonnegative and sum to at most 1");
}

nlohmann::json TrainingConfig::to_json() const {
    return nlohmann::json{{"synthetic", synthetic},
                          {"synth_entities", synth_entities},
                          {"synth_relations", synth_relations},
                          {"synth_avg_degree", synth_avg_degree},
                          {"synth_removal_s", synth_removal_s},
                          {"synth_removal_t", synth_removal_t},
                          {"synth_seed_fraction", synth_seed_fraction},
                          {"source_triples", source_triples},
                          {"target_triples", target_triples},
                          {"links", links},
                          {"seed_links", seed_links},
                          {"eval_links", eval_links},
                          {"vectors", vectors},
                          {"split_train", split_train},
                          {"split_dev", split_dev},
                          {"split_test", split_test},
                          {"dim_t", dim_t},
                          {"dim_g", dim_g},
                          {"gnn_layers", gnn_layers},
                          {"gamma_t", gamma_t},
                          {"beta_tm", beta_tm},
                          {"beta_tc", beta_tc},
                          {"lr_t", lr_t},
                          {"k_neg_t", k_neg_t},
                          {"batch_size", batch_size},
                          {"gamma_g", gamma_g},
                          {"beta_g", beta_g},
                          {"lr_g", lr_g},
                          {"leaky_slope", leaky_slope},
                          {"k_neg_g", k_neg_g},
                          {"beta_tg", beta_tg},
                          {"eval_step", eval_step},
                          {"max_epochs", max_epochs},
                          {"patience", patience},
                          {"nominate_c", nominate_c},
                          {"nominate_n", nominate_n},
                          {"recovery", recovery},
                          {"rec_k_neg", rec_k_neg},
                          {"rec_sample_size", rec_sample_size},
                          {"rec_permanence", rec_permanence},
                          {"rec_start_epoch", rec_start_epoch},
                          {"rec_lr", rec_lr},
                          {"bce_negatives", bce_negatives},
                          {"transitivity_channel", transitivity_channel},
                          {"proximity_channel", proximity_channel},
                          {"uniform_attention", uniform_attention},
                          {"seed_update", seed_update},
                          {"seed", seed},
                          {"threads", threads}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config JSON must be an object");
    TrainingConfig c;
    const nlohmann::json defaults = c.to_json();
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) throw ConfigError("unknown config key: " + key);
    }
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) {
            try {
                out = j.at(key).get<std::decay_t<decltype(out)>>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError(std::string("bad value type for config key: ") + key);
            }
        }
    };
    get("synthetic", c.synthetic);
    get("synth_entities", c.synth_entities);
    get("synth_relations", c.synth_relations);
    get("synth_avg_degree", c.synth_avg_degree);
    get("synth_removal_s", c.synth_removal_s);
    get("synth_removal_t", c.synth_removal_t);
    get("synth_seed_fraction", c.synth_seed_fraction);
    get("source_triples", c.source_triples);
    get("target_triples", c.target_triples);
    get("links", c.links);
    get("seed_links", c.seed_links);
    get("eval_links", c.eval_links);
    get("vectors", c.vectors);
    get("split_train", c.split_train);
    get("split_dev", c.split_dev);
    get("split_test", c.split_test);
    get("dim_t", c.dim_t);
    get("dim_g", c.dim_g);
    get("gnn_layers", c.gnn_layers);
    get("gamma_t", c.gamma_t);
    get("beta_tm", c.beta_tm);
    get("beta_tc", c.beta_tc);
    get("lr_t", c.lr_t);
    get("k_neg_t", c.k_neg_t);
    get("batch_size", c.batch_size);
    get("gamma_g", c.gamma_g);
    get("beta_g", c.beta_g);
    get("lr_g", c.lr_g);
    get("leaky_slope", c.leaky_slope);
    get("k_neg_g", c.k_neg_g);
    get("beta_tg", c.beta_tg);
    get("eval_step", c.eval_step);
    get("max_epochs", c.max_epochs);
    get("patience", c.patience);
    get("nominate_c", c.nominate_c);
    get("nominate_n", c.nominate_n);
    get("recovery", c.recovery);
    get("rec_k_neg", c.rec_k_neg);
    get("rec_sample_size", c.rec_sample_size);
    get("rec_permanence", c.rec_permanence);
    get("rec_start_epoch", c.rec_start_epoch);
    get("rec_lr", c.rec_lr);
    get("bce_negatives", c.bce_negatives);
    get("transitivity_channel", c.transitivity_channel);
    get("proximity_channel", c.proximity_channel);
    get("uniform_attention", c.uniform_attention);
    get("seed_update", c.seed_update);
    get("seed", c.seed);
    get("threads", c.threads);
    return c;
}

TrainingConfig TrainingConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

int threads_from_env() {
    const char* env = std::getenv("IKAMI_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("IKAMI_THREADS must be a positive integer");
    return static_cast<int>(v);
}

}  // namespace ikami
