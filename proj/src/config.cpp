#include "xact/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace xact {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: " + key + " expects a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw std::invalid_argument("config: " + key + " expects true or false, got '" + v + "'");
}

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

ModelConfig TrainConfig::model_config(std::size_t vocab) const
{
    const auto choice = parse_ffn_choice(ffn);
    if (!choice) {
        throw std::invalid_argument("config: unknown activation '" + ffn + "'");
    }
    ModelConfig m;
    m.vocab = vocab;
    m.d_model = hidden_size;
    m.context = context_length;
    m.n_layers = num_hidden_layers;
    m.block = choice->block;
    m.activation = choice->activation;
    m.hyper.beta = beta;
    m.alpha_p_init = alpha_p_init;
    m.alpha_n_init = alpha_n_init;
    m.tie_embeddings = tie_word_embeddings;
    m.seed = seed;
    return m;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = {
        "activation",        "context_length",    "batch_size",        "hidden_size",
        "num_hidden_layers", "tie_word_embeddings", "max_learning_rate", "min_learning_rate",
        "lr_warmup_steps",   "lr_constant_steps", "lr_cooldown_steps", "lr_cooldown_style",
        "adam_beta1",        "adam_beta2",        "adam_epsilon",      "weight_decay",
        "grad_clip",         "alpha_p_init",      "alpha_n_init",      "beta",
        "seed",              "log_every",         "corpus",
    };
    return keys;
}

TrainConfig parse_config(std::istream& in, const std::filesystem::path& base_dir)
{
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto& keys = config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (!kv.emplace(key, value).second) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }

    std::string missing;
    for (const auto& k : config_keys()) {
        if (!kv.contains(k)) {
            missing += (missing.empty() ? "" : ", ") + k;
        }
    }
    if (!missing.empty()) {
        throw std::invalid_argument("config: missing keys: " + missing);
    }

    TrainConfig c;
    c.ffn = kv["activation"];
    if (!parse_ffn_choice(c.ffn)) {
        throw std::invalid_argument("config: unknown activation '" + c.ffn + "'");
    }
    c.context_length = to_count("context_length", kv["context_length"]);
    c.batch_size = to_count("batch_size", kv["batch_size"]);
    c.hidden_size = to_count("hidden_size", kv["hidden_size"]);
    c.num_hidden_layers = to_count("num_hidden_layers", kv["num_hidden_layers"]);
    c.tie_word_embeddings = to_bool("tie_word_embeddings", kv["tie_word_embeddings"]);
    c.schedule.max_lr = to_real("max_learning_rate", kv["max_learning_rate"]);
    c.schedule.min_lr = to_real("min_learning_rate", kv["min_learning_rate"]);
    c.schedule.warmup_steps = to_count("lr_warmup_steps", kv["lr_warmup_steps"]);
    c.schedule.constant_steps = to_count("lr_constant_steps", kv["lr_constant_steps"]);
    c.schedule.cooldown_steps = to_count("lr_cooldown_steps", kv["lr_cooldown_steps"]);
    const auto style = parse_cooldown_style(kv["lr_cooldown_style"]);
    if (!style) {
        throw std::invalid_argument("config: lr_cooldown_style must be 1-sqrt or cosine");
    }
    c.schedule.style = *style;
    c.schedule.validate();
    c.adam.beta1 = to_real("adam_beta1", kv["adam_beta1"]);
    c.adam.beta2 = to_real("adam_beta2", kv["adam_beta2"]);
    c.adam.eps = to_real("adam_epsilon", kv["adam_epsilon"]);
    c.adam.weight_decay = to_real("weight_decay", kv["weight_decay"]);
    c.adam.grad_clip = to_real("grad_clip", kv["grad_clip"]);
    c.alpha_p_init = to_real("alpha_p_init", kv["alpha_p_init"]);
    c.alpha_n_init = to_real("alpha_n_init", kv["alpha_n_init"]);
    c.beta = to_real("beta", kv["beta"]);
    c.seed = to_count("seed", kv["seed"]);
    c.log_every = to_count("log_every", kv["log_every"]);
    if (c.log_every == 0 || c.batch_size == 0 || c.context_length == 0 || c.hidden_size == 0) {
        throw std::invalid_argument("config: log_every, batch_size, context_length and hidden_size must be positive");
    }
    const auto& corpus = kv["corpus"];
    if (corpus != "bundled") {
        c.corpus = std::filesystem::path(corpus);
        if (c.corpus.is_relative() && !base_dir.empty()) {
            c.corpus = base_dir / c.corpus;
        }
    }
    return c;
}

TrainConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("config: cannot open " + path.string());
    }
    return parse_config(in, path.parent_path());
}

std::string format_config(const TrainConfig& c)
{
    std::ostringstream out;
    out << "activation = " << c.ffn << '\n'
        << "context_length = " << c.context_length << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "hidden_size = " << c.hidden_size << '\n'
        << "num_hidden_layers = " << c.num_hidden_layers << '\n'
        << "tie_word_embeddings = " << (c.tie_word_embeddings ? "true" : "false") << '\n'
        << "max_learning_rate = " << real(c.schedule.max_lr) << '\n'
        << "min_learning_rate = " << real(c.schedule.min_lr) << '\n'
        << "lr_warmup_steps = " << c.schedule.warmup_steps << '\n'
        << "lr_constant_steps = " << c.schedule.constant_steps << '\n'
        << "lr_cooldown_steps = " << c.schedule.cooldown_steps << '\n'
        << "lr_cooldown_style = " << to_string(c.schedule.style) << '\n'
        << "adam_beta1 = " << real(c.adam.beta1) << '\n'
        << "adam_beta2 = " << real(c.adam.beta2) << '\n'
        << "adam_epsilon = " << real(c.adam.eps) << '\n'
        << "weight_decay = " << real(c.adam.weight_decay) << '\n'
        << "grad_clip = " << real(c.adam.grad_clip) << '\n'
        << "alpha_p_init = " << real(c.alpha_p_init) << '\n'
        << "alpha_n_init = " << real(c.alpha_n_init) << '\n'
        << "beta = " << real(c.beta) << '\n'
        << "seed = " << c.seed << '\n'
        << "log_every = " << c.log_every << '\n'
        << "corpus = " << (c.corpus.empty() ? std::string("bundled") : c.corpus.string()) << '\n';
    return out.str();
}

} // namespace xact
