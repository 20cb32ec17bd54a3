#include "xact/cli.hpp"

#include "xact/checkpoint.hpp"
#include "xact/derivation.hpp"
#include "xact/trainer.hpp"
#include "xact/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace xact {

namespace {

/// Bad flag values and malformed inputs; mapped to the usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ActivationKind kind_arg(const std::string& name)
{
    if (auto k = parse_activation_kind(name)) {
        return *k;
    }
    throw UsageError("unknown activation kind '" + name + "'");
}

std::vector<ActivationKind> kinds_arg(const std::string& name)
{
    if (name == "all") {
        return {kAllActivationKinds.begin(), kAllActivationKinds.end()};
    }
    return {kind_arg(name)};
}

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return f;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) {
                throw std::invalid_argument(cell);
            }
        } catch (const std::logic_error&) {
            throw UsageError("not a number: '" + cell + "'");
        }
    }
    return out;
}

// ---- curve ----

struct CurveArgs {
    std::string kind;
    double alpha_p = 0.8;
    double alpha_n = 0.8;
    double beta = 0.5;
    double xmin = -5.0;
    double xmax = 5.0;
    std::size_t samples = 1001;
    std::string out;
    std::string sweep;
};

void write_curve(const CurveArgs& a, ActivationKind kind, const ConstrainedParams& p,
                 const std::filesystem::path& path)
{
    FixedHyper h;
    h.beta = a.beta;
    if (kind == ActivationKind::XIelu && !(p.alpha_p > 0.0 && p.alpha_n > h.negative_beta())) {
        throw UsageError("xielu needs alpha_p > 0 and alpha_n > beta");
    }
    if (kind == ActivationKind::XIPRelu && !(p.alpha_p > 0.0 && p.alpha_n > 0.0)) {
        throw UsageError("xiprelu needs alpha_p > 0 and alpha_n > 0");
    }
    auto f = open_out(path);
    f << "x,f,dfdx\n";
    for (std::size_t i = 0; i < a.samples; ++i) {
        const double t = double(i) / double(a.samples - 1);
        const double x = i + 1 == a.samples ? a.xmax : a.xmin + t * (a.xmax - a.xmin);
        f << csv_real(x) << ',' << csv_real(activation_fwd(kind, x, p, h)) << ','
          << csv_real(activation_dx(kind, x, p, h)) << '\n';
    }
}

int cmd_curve(const CurveArgs& a, std::ostream& out)
{
    const auto kind = kind_arg(a.kind);
    if (!(a.xmin < a.xmax) || a.samples < 2) {
        throw UsageError("curve needs xmin < xmax and at least 2 samples");
    }
    const ConstrainedParams p{a.alpha_p, a.alpha_n};
    if (a.sweep.empty()) {
        write_curve(a, kind, p, a.out);
        out << "wrote " << a.out << '\n';
        return kExitOk;
    }
    const auto eq = a.sweep.find('=');
    const std::string name = a.sweep.substr(0, eq);
    if (eq == std::string::npos || (name != "alpha_p" && name != "alpha_n" && name != "beta")) {
        throw UsageError("--sweep expects alpha_p=..., alpha_n=... or beta=...");
    }
    const std::filesystem::path base(a.out);
    for (double v : parse_list(a.sweep.substr(eq + 1))) {
        CurveArgs b = a;
        ConstrainedParams q = p;
        if (name == "alpha_p") {
            q.alpha_p = v;
        } else if (name == "alpha_n") {
            q.alpha_n = v;
        } else {
            b.beta = v;
        }
        std::ostringstream suffix;
        suffix << '_' << name << '_' << v;
        auto path = base.parent_path() / (base.stem().string() + suffix.str() + base.extension().string());
        write_curve(b, kind, q, path);
        out << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

// ---- gradcheck ----

struct GradcheckArgs {
    std::string kind = "all";
    std::uint64_t seed = 0;
    std::string out;
    unsigned jobs = 1;
};

std::vector<GradCheckReport> gradcheck_cell(ActivationKind kind, std::uint64_t seed)
{
    const FixedHyper hyper;
    const auto draws = draw_params(kind, hyper, 16, seed);
    const auto policy = default_policy(kind, seed);
    std::vector<GradCheckReport> out;
    out.push_back(gradcheck_activation(kind, draws, hyper, policy, 1e-5));
    out.push_back(gradcheck_params(kind, draws, hyper, policy, 1e-6));
    const auto model = gradcheck_toylm(BlockType::Standard, kind, seed);
    out.push_back(gradcheck_model(model, gradcheck_batch(model.config, 3, seed), 1e-4));
    return out;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err)
{
    const auto kinds = kinds_arg(a.kind);
    std::vector<std::vector<GradCheckReport>> cells(kinds.size());
    const unsigned jobs = std::max(1u, std::min<unsigned>(a.jobs, unsigned(kinds.size())));
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
        pool.emplace_back([&, j] {
            for (std::size_t i = j; i < kinds.size(); i += jobs) {
                cells[i] = gradcheck_cell(kinds[i], a.seed);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    std::ostringstream csv;
    csv << report_csv_header() << '\n';
    bool ok = true;
    for (const auto& cell : cells) {
        for (const auto& r : cell) {
            csv << report_csv_row(r) << '\n';
            out << std::left << std::setw(16) << r.check << std::setw(10) << r.subject << (r.pass ? "pass" : "FAIL")
                << "  max_rel_err=" << csv_real(r.max_rel_err) << '\n';
            if (!r.pass) {
                ok = false;
                err << r.check << ' ' << r.subject << ": worst at " << csv_real(r.worst_x)
                    << (r.worst_label.empty() ? "" : " (" + r.worst_label + ")") << ", rel err "
                    << csv_real(r.max_rel_err) << " >= " << csv_real(r.tolerance) << '\n';
            }
        }
    }
    if (!a.out.empty()) {
        open_out(a.out) << csv.str();
    }
    return ok ? kExitOk : kExitCheckFailed;
}

// ---- stability ----

int cmd_stability(const std::string& mode_name, const std::string& path, std::ostream& out)
{
    const auto mode = parse_precision_mode(mode_name);
    if (!mode) {
        throw UsageError("unknown precision mode '" + mode_name + "'");
    }
    std::ostringstream csv;
    csv << stability_csv_header() << '\n';
    for (double x : {-1.0, -1e-1, -1e-2, -1e-3, -1e-4, -1e-6, -1e-8, -1e-10}) {
        const auto p = stability_probe(x, *mode);
        csv << stability_csv_row(p) << '\n';
    }
    if (path.empty()) {
        out << csv.str();
    } else {
        open_out(path) << csv.str();
        out << "wrote " << path << '\n';
    }
    return kExitOk;
}

// ---- derive ----

std::string bound(double v)
{
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    return csv_real(v);
}

int cmd_derive(const std::string& spec_path, const std::string& anchor, const std::string& path, std::ostream& out)
{
    std::ifstream in(spec_path);
    if (!in) {
        throw UsageError("cannot open spec " + spec_path);
    }
    GradientSpec g;
    try {
        g = parse_gradient_spec(in);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto av = parse_list(anchor);
    if (av.size() != 2) {
        throw UsageError("--anchor expects x,v");
    }
    const auto d = integrate(g, av[0], av[1]);
    std::ostringstream csv;
    csv << "lo,hi,x,x2,x3,ex,constant\n";
    for (std::size_t i = 0; i < d.pieces.size(); ++i) {
        const auto& p = d.pieces[i];
        const std::string lo = bound(g.piece_lower(i));
        const std::string hi = bound(g.piece_upper(i));
        csv << lo << ',' << hi << ',' << csv_real(p.lin) << ',' << csv_real(p.quad) << ',' << csv_real(p.cubic)
            << ',' << csv_real(p.expo) << ',' << csv_real(p.constant) << '\n';
        out << "piece " << i << " (" << lo << ", " << hi << "]: C = " << csv_real(p.constant) << '\n';
    }
    for (const auto& j : gradient_discontinuities(g)) {
        out << "gradient jump at " << csv_real(j.at) << ": " << csv_real(j.jump) << '\n';
    }
    if (!path.empty()) {
        open_out(path) << csv.str();
    }
    return kExitOk;
}

// ---- train / alphas ----

int cmd_train(const std::string& config_path, const std::string& out_dir, std::ostream& out)
{
    TrainConfig config;
    try {
        config = load_config(config_path);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto start = std::chrono::steady_clock::now();
    const auto result = run_training(config, out_dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "steps " << config.schedule.total_steps() << ", final smoothed loss "
        << csv_real(result.log.final_smoothed_loss()) << ", " << std::fixed << std::setprecision(1) << secs
        << " s\n"
        << std::defaultfloat << "wrote " << result.log_path.string() << " and " << result.checkpoint_path.string()
        << '\n';
    return kExitOk;
}

void print_alpha_table(const std::vector<ConstrainedParams>& first, const std::vector<ConstrainedParams>& last,
                       std::ostream& out)
{
    out << "layer  alpha_p_first  alpha_n_first  alpha_p_last  alpha_n_last\n";
    for (std::size_t i = 0; i < last.size(); ++i) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%5zu  %13.6f  %13.6f  %12.6f  %12.6f\n", i, first[i].alpha_p,
                      first[i].alpha_n, last[i].alpha_p, last[i].alpha_n);
        out << buf;
    }
}

std::vector<ConstrainedParams> row_alphas(const RunLog& log, const RunRow& row)
{
    std::vector<ConstrainedParams> out(log.layers, ConstrainedParams{NAN, NAN});
    for (std::size_t i = 0; i < log.layers; ++i) {
        if (log.has_alpha_p) {
            out[i].alpha_p = row.alpha_p[i];
        }
        if (log.has_alpha_n) {
            out[i].alpha_n = row.alpha_n[i];
        }
    }
    return out;
}

int cmd_alphas(const std::string& log_path, const std::string& checkpoint_path, std::ostream& out)
{
    if (!checkpoint_path.empty()) {
        const auto model = load_checkpoint(std::filesystem::path(checkpoint_path));
        const auto a = layer_alphas(model);
        print_alpha_table(a, a, out);
        return kExitOk;
    }
    if (log_path.empty()) {
        throw UsageError("alphas needs --log or --checkpoint");
    }
    RunLog log;
    try {
        log = load_run_log(log_path);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (log.rows.empty()) {
        throw UsageError("run log has no rows");
    }
    if (!log.has_alpha_p && !log.has_alpha_n) {
        out << "no trainable activation parameters in this run\n";
        return kExitOk;
    }
    print_alpha_table(row_alphas(log, log.rows.front()), row_alphas(log, log.rows.back()), out);
    return kExitOk;
}

// ---- bench ----

int cmd_bench(const std::string& kind_name, std::size_t n, std::ostream& out)
{
    if (n == 0) {
        throw UsageError("--n must be positive");
    }
    const FixedHyper hyper;
    const ConstrainedParams p{0.8, 0.8};
    std::vector<double> xs(n);
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    for (auto& x : xs) {
        x = dist(rng);
    }
    out << "kind       exps mults adds divs conds   fwd ns/elem   bwd ns/elem\n";
    for (auto kind : kinds_arg(kind_name)) {
        const auto c = op_count(kind);
        volatile double sink = 0.0;
        auto time = [&](auto&& fn) {
            const auto t0 = std::chrono::steady_clock::now();
            double acc = 0.0;
            for (double x : xs) {
                acc += fn(x);
            }
            sink = acc;
            return std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count() /
                   double(n);
        };
        const double fwd = time([&](double x) { return activation_fwd(kind, x, p, hyper); });
        const double bwd = time([&](double x) { return activation_dx(kind, x, p, hyper); });
        (void)sink;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-10s %4u %5u %4u %4u %5u %13.2f %13.2f\n",
                      std::string(to_string(kind)).c_str(), c.exps, c.mults, c.adds, c.divs, c.conditionals, fwd,
                      bwd);
        out << buf;
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gradient-first trainable activation workbench"};
    app.require_subcommand(1);

    CurveArgs curve;
    auto* c = app.add_subcommand("curve", "write f and df/dx of one activation to CSV");
    c->add_option("--kind", curve.kind)->required();
    c->add_option("--alpha-p", curve.alpha_p);
    c->add_option("--alpha-n", curve.alpha_n);
    c->add_option("--beta", curve.beta);
    c->add_option("--xmin", curve.xmin);
    c->add_option("--xmax", curve.xmax);
    c->add_option("--samples", curve.samples);
    c->add_option("--out", curve.out)->required();
    c->add_option("--sweep", curve.sweep, "one file per value, e.g. alpha_n=0.5,1,2");

    GradcheckArgs gc;
    auto* g = app.add_subcommand("gradcheck", "finite-difference checks of input, parameter and model gradients");
    g->add_option("--kind", gc.kind);
    g->add_option("--seed", gc.seed);
    g->add_option("--out", gc.out);
    g->add_option("--jobs", gc.jobs)->check(CLI::PositiveNumber);

    std::string mode = "single";
    std::string stability_out;
    auto* s = app.add_subcommand("stability", "naive vs stable e^x - 1 in emulated precision");
    s->add_option("--mode", mode);
    s->add_option("--out", stability_out);

    std::string spec_path;
    std::string anchor = "0,0";
    std::string derive_out;
    auto* d = app.add_subcommand("derive", "integrate a piecewise gradient spec");
    d->add_option("--spec", spec_path)->required();
    d->add_option("--anchor", anchor);
    d->add_option("--out", derive_out);

    std::string config_path;
    std::string out_dir = "run";
    auto* t = app.add_subcommand("train", "train the toy language model");
    t->add_option("--config", config_path)->required();
    t->add_option("--out-dir", out_dir);

    std::string log_path;
    std::string checkpoint_path;
    auto* al = app.add_subcommand("alphas", "per-layer activation parameters of a run");
    al->add_option("--log", log_path);
    al->add_option("--checkpoint", checkpoint_path);

    std::string bench_kind = "all";
    std::size_t bench_n = 1'000'000;
    auto* b = app.add_subcommand("bench", "operation census and per-element timings");
    b->add_option("--kind", bench_kind);
    b->add_option("--n", bench_n);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        if (!app.get_subcommands().empty()) {
            err << app.get_subcommands().front()->help();
        } else {
            err << app.help();
        }
        return kExitUsage;
    }

    try {
        if (*c) {
            return cmd_curve(curve, out);
        }
        if (*g) {
            return cmd_gradcheck(gc, out, err);
        }
        if (*s) {
            return cmd_stability(mode, stability_out, out);
        }
        if (*d) {
            return cmd_derive(spec_path, anchor, derive_out, out);
        }
        if (*t) {
            return cmd_train(config_path, out_dir, out);
        }
        if (*al) {
            return cmd_alphas(log_path, checkpoint_path, out);
        }
        return cmd_bench(bench_kind, bench_n, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
}

} // namespace xact
