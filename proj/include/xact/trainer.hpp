#pragma once

#include "xact/adamw.hpp"
#include "xact/config.hpp"
#include "xact/corpus.hpp"
#include "xact/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace xact {

struct RunRow {
    std::size_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    std::vector<double> alpha_p; ///< one per layer, constrained
    std::vector<double> alpha_n;
};

/// Training trace. CSV header is `step,lr,loss,alpha_p_0..alpha_p_{L-1},
/// alpha_n_0..alpha_n_{L-1}`; alpha columns appear only for the slots the
/// activation actually trains.
struct RunLog {
    std::size_t layers = 0;
    bool has_alpha_p = false;
    bool has_alpha_n = false;
    std::vector<RunRow> rows;

    std::string csv_header() const;
    std::string to_csv() const;

    /// Mean loss over the last `window` rows.
    double final_smoothed_loss(std::size_t window = 50) const;

    /// Trailing moving average of the loss column, one value per row.
    std::vector<double> smoothed_losses(std::size_t window = 50) const;
};

/// Throws std::invalid_argument on a malformed log.
RunLog parse_run_log(std::istream& in);
RunLog load_run_log(const std::filesystem::path& path);

/// Fresh model sized for the corpus.
ToyLm make_model(const TrainConfig& config, const Corpus& corpus);

/// Runs schedule.total_steps() AdamW steps on batches drawn with the config
/// seed. A row is logged at every log_every-th step and at the last step,
/// with the batch loss and activation parameters before that step's update.
/// Deterministic for a fixed (config, model, corpus).
RunLog train(const TrainConfig& config, ToyLm& model, const Corpus& corpus);

struct TrainOutputs {
    RunLog log;
    ToyLm model;
    std::filesystem::path log_path;
    std::filesystem::path checkpoint_path;
};

/// Loads the corpus named by the config, trains, and writes run_log.csv and
/// checkpoint.txt into out_dir.
TrainOutputs run_training(const TrainConfig& config, const std::filesystem::path& out_dir);

} // namespace xact
