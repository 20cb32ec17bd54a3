#pragma once

#include "xact/adamw.hpp"
#include "xact/model.hpp"
#include "xact/schedule.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace xact {

/// Training run settings, read from a flat `key = value` file.
struct TrainConfig {
    std::string ffn = "xielu"; ///< activation kind name or "swiglu"
    std::size_t context_length = 8;
    std::size_t batch_size = 64;
    std::size_t hidden_size = 64;
    std::size_t num_hidden_layers = 4;
    bool tie_word_embeddings = true;
    LrSchedule schedule;
    AdamWHyper adam;
    double alpha_p_init = 0.8;
    double alpha_n_init = 0.8;
    double beta = 0.5;
    std::uint64_t seed = 0;
    std::size_t log_every = 1;
    std::filesystem::path corpus; ///< empty selects the bundled corpus

    /// Model settings implied by this config for a corpus with `vocab` symbols.
    ModelConfig model_config(std::size_t vocab) const;
};

/// Every key a config file must set.
const std::vector<std::string>& config_keys();

/// Throws std::invalid_argument listing all missing keys, or naming an
/// unknown key or malformed value. Relative corpus paths resolve against
/// `base_dir`.
TrainConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
TrainConfig load_config(const std::filesystem::path& path);

/// The desk defaults written back out in file form.
std::string format_config(const TrainConfig& config);

} // namespace xact
