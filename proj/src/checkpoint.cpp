#include "xact/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace xact {

namespace {

constexpr const char* kMagic = "xact-checkpoint";
constexpr int kVersion = 1;

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("checkpoint: " + what); }

} // namespace

void save_checkpoint(const ToyLm& model, std::ostream& out)
{
    const auto& c = model.config;
    out << kMagic << ' ' << kVersion << '\n';
    out << "vocab " << c.vocab << '\n';
    out << "d_model " << c.d_model << '\n';
    out << "context " << c.context << '\n';
    out << "n_layers " << c.n_layers << '\n';
    out << "ffn " << ffn_name(c.block, c.activation) << '\n';
    out << "beta " << real(c.hyper.beta) << '\n';
    out << "beta_n " << real(c.hyper.negative_beta()) << '\n';
    out << "eps " << real(c.hyper.eps) << '\n';
    out << "elu_alpha " << real(c.hyper.elu_alpha) << '\n';
    out << "exp_path " << (c.hyper.exp_path == NegativeExpPath::Clamp ? "clamp" : "expm1") << '\n';
    out << "tie_embeddings " << (c.tie_embeddings ? 1 : 0) << '\n';
    auto copy = model;
    const auto params = parameters(copy);
    out << "params " << params.size() << '\n';
    for (const auto& p : params) {
        out << p.name << ' ' << p.values.size();
        for (double v : p.values) {
            out << ' ' << real(v);
        }
        out << '\n';
    }
}

void save_checkpoint(const ToyLm& model, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        fail("cannot open " + path.string() + " for writing");
    }
    save_checkpoint(model, out);
}

ToyLm load_checkpoint(std::istream& in)
{
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) {
        fail("missing header");
    }
    if (version != kVersion) {
        fail("unsupported version " + std::to_string(version));
    }
    std::map<std::string, std::string> header;
    const char* keys[] = {"vocab", "d_model", "context", "n_layers", "ffn", "beta", "beta_n",
                          "eps", "elu_alpha", "exp_path", "tie_embeddings"};
    for (const char* key : keys) {
        std::string k, v;
        if (!(in >> k >> v) || k != key) {
            fail(std::string("expected header key ") + key);
        }
        header[k] = v;
    }
    ModelConfig c;
    c.vocab = std::stoul(header["vocab"]);
    c.d_model = std::stoul(header["d_model"]);
    c.context = std::stoul(header["context"]);
    c.n_layers = std::stoul(header["n_layers"]);
    const auto ffn = parse_ffn_choice(header["ffn"]);
    if (!ffn) {
        fail("unknown ffn " + header["ffn"]);
    }
    c.block = ffn->block;
    c.activation = ffn->activation;
    c.hyper.beta = std::stod(header["beta"]);
    const double beta_n = std::stod(header["beta_n"]);
    if (beta_n != c.hyper.beta) {
        c.hyper.beta_n = beta_n;
    }
    c.hyper.eps = std::stod(header["eps"]);
    c.hyper.elu_alpha = std::stod(header["elu_alpha"]);
    c.hyper.exp_path = header["exp_path"] == "clamp" ? NegativeExpPath::Clamp : NegativeExpPath::Expm1;
    c.tie_embeddings = header["tie_embeddings"] == "1";

    ToyLm model = make_toylm(c);
    auto params = parameters(model);
    std::string tag;
    std::size_t count = 0;
    if (!(in >> tag >> count) || tag != "params" || count != params.size()) {
        fail("parameter table does not match the model structure");
    }
    for (auto& p : params) {
        std::string name;
        std::size_t n = 0;
        if (!(in >> name >> n) || name != p.name || n != p.values.size()) {
            fail("expected parameter " + p.name);
        }
        for (auto& v : p.values) {
            std::string token;
            if (!(in >> token)) {
                fail("truncated values for " + p.name);
            }
            v = std::stod(token);
        }
    }
    return model;
}

ToyLm load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail("cannot open " + path.string());
    }
    return load_checkpoint(in);
}

} // namespace xact
