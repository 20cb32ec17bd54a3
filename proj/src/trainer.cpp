#include "xact/trainer.hpp"

#include "xact/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace xact {

namespace {

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
        out.push_back(cell);
    }
    return out;
}

} // namespace

std::string RunLog::csv_header() const
{
    std::string h = "step,lr,loss";
    if (has_alpha_p) {
        for (std::size_t i = 0; i < layers; ++i) {
            h += ",alpha_p_" + std::to_string(i);
        }
    }
    if (has_alpha_n) {
        for (std::size_t i = 0; i < layers; ++i) {
            h += ",alpha_n_" + std::to_string(i);
        }
    }
    return h;
}

std::string RunLog::to_csv() const
{
    std::string out = csv_header() + '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.step) + ',' + real(r.lr) + ',' + real(r.loss);
        for (double a : r.alpha_p) {
            out += ',' + real(a);
        }
        for (double a : r.alpha_n) {
            out += ',' + real(a);
        }
        out += '\n';
    }
    return out;
}

double RunLog::final_smoothed_loss(std::size_t window) const
{
    if (rows.empty()) {
        throw std::logic_error("final_smoothed_loss: empty log");
    }
    const auto s = smoothed_losses(window);
    return s.back();
}

std::vector<double> RunLog::smoothed_losses(std::size_t window) const
{
    std::vector<double> out;
    out.reserve(rows.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        sum += rows[i].loss;
        if (i >= window) {
            sum -= rows[i - window].loss;
        }
        out.push_back(sum / double(std::min(i + 1, window)));
    }
    return out;
}

RunLog parse_run_log(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("run log: empty input");
    }
    const auto header = split(line);
    if (header.size() < 3 || header[0] != "step" || header[1] != "lr" || header[2] != "loss") {
        throw std::invalid_argument("run log: header must start with step,lr,loss");
    }
    RunLog log;
    std::size_t n_p = 0;
    std::size_t n_n = 0;
    for (std::size_t i = 3; i < header.size(); ++i) {
        if (header[i] == "alpha_p_" + std::to_string(n_p)) {
            ++n_p;
        } else if (header[i] == "alpha_n_" + std::to_string(n_n)) {
            ++n_n;
        } else {
            throw std::invalid_argument("run log: unexpected column " + header[i]);
        }
    }
    if (n_p && n_n && n_p != n_n) {
        throw std::invalid_argument("run log: alpha_p and alpha_n column counts differ");
    }
    log.has_alpha_p = n_p > 0;
    log.has_alpha_n = n_n > 0;
    log.layers = std::max(n_p, n_n);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw std::invalid_argument("run log: row has " + std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
        }
        RunRow r;
        r.step = std::stoul(cells[0]);
        r.lr = std::stod(cells[1]);
        r.loss = std::stod(cells[2]);
        for (std::size_t i = 0; i < n_p; ++i) {
            r.alpha_p.push_back(std::stod(cells[3 + i]));
        }
        for (std::size_t i = 0; i < n_n; ++i) {
            r.alpha_n.push_back(std::stod(cells[3 + n_p + i]));
        }
        if (!log.rows.empty() && r.step <= log.rows.back().step) {
            throw std::invalid_argument("run log: steps must be strictly increasing");
        }
        log.rows.push_back(std::move(r));
    }
    return log;
}

RunLog load_run_log(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("run log: cannot open " + path.string());
    }
    return parse_run_log(in);
}

ToyLm make_model(const TrainConfig& config, const Corpus& corpus)
{
    return make_toylm(config.model_config(corpus.vocab()));
}

RunLog train(const TrainConfig& config, ToyLm& model, const Corpus& corpus)
{
    config.schedule.validate();
    const auto layout = param_layout(model.config.activation);
    const bool standard = model.config.block == BlockType::Standard;
    RunLog log;
    log.layers = model.blocks.size();
    log.has_alpha_p = standard && layout.alpha_p;
    log.has_alpha_n = standard && layout.alpha_n;

    // batches come from their own stream so the model init seed and the data
    // order stay independent
    std::mt19937_64 data_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    // fail before any work if the corpus is too small
    (void)sample_batch(corpus, config.batch_size, model.config.context, data_rng);
    data_rng.seed(config.seed ^ 0x9e3779b97f4a7c15ULL);

    AdamWState state;
    const auto params = parameters(model);
    const std::size_t steps = config.schedule.total_steps();
    for (std::size_t step = 0; step < steps; ++step) {
        const Batch batch = sample_batch(corpus, config.batch_size, model.config.context, data_rng);
        auto result = toylm_bwd(model, batch);
        const double lr = lr_at(config.schedule, double(step));
        if (step % config.log_every == 0 || step + 1 == steps) {
            RunRow row{step, lr, result.loss, {}, {}};
            for (const auto& a : layer_alphas(model)) {
                if (log.has_alpha_p) {
                    row.alpha_p.push_back(a.alpha_p);
                }
                if (log.has_alpha_n) {
                    row.alpha_n.push_back(a.alpha_n);
                }
            }
            log.rows.push_back(std::move(row));
        }
        if (!std::isfinite(result.loss)) {
            throw std::runtime_error("train: loss became non-finite at step " + std::to_string(step));
        }
        const auto grads = parameters(result.grads);
        adamw_step(params, grads, state, lr, config.adam);
    }
    return log;
}

TrainOutputs run_training(const TrainConfig& config, const std::filesystem::path& out_dir)
{
    const auto corpus = load_corpus(config.corpus.empty() ? bundled_corpus_path() : config.corpus);
    TrainOutputs out{RunLog{}, make_model(config, corpus), out_dir / "run_log.csv", out_dir / "checkpoint.txt"};
    out.log = train(config, out.model, corpus);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out.log_path);
        if (!f) {
            throw std::runtime_error("cannot write " + out.log_path.string());
        }
        f << out.log.to_csv();
    }
    save_checkpoint(out.model, out.checkpoint_path);
    return out;
}

} // namespace xact
