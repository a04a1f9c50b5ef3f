#pragma once

// pista command-line front end. run() is kept in a header so the test suite can drive it
// in-process.

#include <pista/pista.hpp>
#include <pista/png_export.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace pista::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { ok = 0, failure = 1, usage = 2 };

/// Flag combinations that are rejected before any work starts.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void echo(const std::string& command, const json& config)
{
    std::cerr << "pista " << command << ' ' << config.dump() << '\n';
}

inline void write_json(const fs::path& path, const json& j)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

template <class F>
void validated(F&& check)
{
    try {
        check();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
}

inline double mean_acceleration(const std::vector<Sample>& data)
{
    double acc = 0.0;
    for (const auto& s : data) acc += s.mask.acceleration();
    return acc / static_cast<double>(data.size());
}

struct SimulateArgs {
    std::string out;
    int n = 10;
    int size = 64;
    int width = 0;
    int coils = 4;
    double af = 4.0;
    int center_lines = -1;
    double noise = 0.01;
    std::uint64_t seed = 0;
    std::uint64_t first_index = 0;
    bool phase = true;
    bool shepp_logan = false;
};

struct MaskArgs {
    std::string out;
    std::string png;
    int size = 64;
    int width = 0;
    double af = 4.0;
    int center_lines = -1;
    std::uint64_t seed = 0;
};

struct TrainArgs {
    std::string data;
    std::string out;
    std::string val;
    std::string history;
    std::string variant = "resnet";
    std::string preset = "desk";
    int epochs = 0;
    int batch_size = 1;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

struct MethodArgs {
    std::string method = "zerofill";
    std::string checkpoint;
    double gamma = 1.0;
    double lambda = 1e-3;
    int iters = 200;
    double tol = 1e-6;
    bool momentum = false;
};

struct ReconArgs {
    std::string data;
    std::string out;
    MethodArgs method;
};

struct EvalArgs {
    std::string data;
    std::string recon;
    std::string report;
    MethodArgs method;
};

struct GradCheckArgs {
    int size = 16;
    int coils = 2;
    int blocks = 2;
    int layers = 2;
    int channels = 8;
    int kernel = 3;
    std::string variant = "resnet";
    double step = 1e-5;
    int entries = 200;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    bool linear = false;
};

struct ExportArgs {
    std::string data;
    std::string recon;
    std::string out;
    std::size_t sample = 0;
    double gain = 5.0;
};

inline void add_method_flags(CLI::App& cmd, MethodArgs& m)
{
    cmd.add_option("--method", m.method, "zerofill | pista | net")
        ->check(CLI::IsMember({"zerofill", "pista", "net"}))
        ->capture_default_str();
    cmd.add_option("--checkpoint", m.checkpoint, "network checkpoint (required for --method net)");
    cmd.add_option("--gamma", m.gamma, "pISTA step size")->capture_default_str();
    cmd.add_option("--lambda", m.lambda, "pISTA sparsity weight")->capture_default_str();
    cmd.add_option("--iters", m.iters, "pISTA iteration cap")->capture_default_str();
    cmd.add_option("--tol", m.tol, "pISTA relative-change tolerance")->capture_default_str();
    cmd.add_flag("--momentum", m.momentum, "FISTA extrapolation in pISTA");
}

inline json method_json(const MethodArgs& m)
{
    json j = {{"method", m.method}};
    if (m.method == "pista")
        j.update({{"gamma", m.gamma}, {"lambda", m.lambda}, {"iters", m.iters}, {"tol", m.tol}, {"momentum", m.momentum}});
    if (m.method == "net") j["checkpoint"] = m.checkpoint;
    return j;
}

inline SolverConfig solver_config(const MethodArgs& m)
{
    SolverConfig c;
    c.gamma = m.gamma;
    c.lambda = m.lambda;
    c.max_iters = m.iters;
    c.tol = m.tol;
    c.momentum = m.momentum;
    return c;
}

inline void check_method(const MethodArgs& m)
{
    if (m.method == "net" && m.checkpoint.empty()) throw UsageError("--method net requires --checkpoint");
    if (m.method != "net" && !m.checkpoint.empty()) throw UsageError("--checkpoint is only used with --method net");
    if (m.method == "pista") validated([&] { solver_config(m).validate(); });
}

/// Reconstruction procedure for a validated method; loads the checkpoint for "net".
inline ReconstructionProcedure make_procedure(const MethodArgs& m)
{
    if (m.method == "zerofill")
        return [](const Sample& s) { return sense_adjoint(s.kspace, s.coils, s.mask); };
    if (m.method == "pista") {
        const SolverConfig cfg = solver_config(m);
        return [cfg](const Sample& s) { return reconstruct_pista(s.kspace, s.coils, s.mask, cfg).image; };
    }
    auto params = std::make_shared<NetworkParams>(load_checkpoint(m.checkpoint).params);
    return [params](const Sample& s) { return network_forward(s.kspace, s.coils, s.mask, *params).back(); };
}

inline int simulate(const SimulateArgs& a)
{
    PhantomSpec phantom;
    phantom.height = a.size;
    phantom.width = a.width > 0 ? a.width : a.size;
    phantom.smooth_phase = a.phase;
    phantom.shepp_logan = a.shepp_logan;
    AcquisitionSpec acq;
    acq.coils = a.coils;
    acq.af = a.af;
    acq.center_lines = a.center_lines;
    acq.noise = a.noise;
    acq.seed = a.seed;
    validated([&] {
        phantom.validate();
        acq.validate(phantom.height);
    });
    const int center = acq.center_lines < 0 ? default_center_lines(phantom.height, acq.af) : acq.center_lines;
    const json config = {{"count", a.n},          {"height", phantom.height}, {"width", phantom.width},
                         {"coils", acq.coils},    {"af", acq.af},             {"center_lines", center},
                         {"noise", acq.noise},    {"seed", acq.seed},         {"first_index", a.first_index},
                         {"smooth_phase", a.phase}, {"shepp_logan", a.shepp_logan}};
    echo("simulate", config);

    const fs::path root(a.out);
    fs::create_directories(root);
    for (int k = 0; k < a.n; ++k)
        write_sample(sample_dir(root, static_cast<std::size_t>(k)),
                     make_sample(phantom, acq, a.first_index + static_cast<std::uint64_t>(k)));
    // drop leftovers of an earlier, larger run so the directory holds exactly n samples
    for (std::size_t k = static_cast<std::size_t>(a.n); fs::is_directory(sample_dir(root, k)); ++k)
        fs::remove_all(sample_dir(root, k));
    write_json(root / "dataset.json", config);
    std::cout << a.n << " samples written to " << root.string() << '\n';
    return ok;
}

inline int mask(const MaskArgs& a)
{
    const int h = a.size;
    const int w = a.width > 0 ? a.width : a.size;
    if (h < 1 || w < 1) throw UsageError("mask dimensions must be positive");
    AcquisitionSpec acq;
    acq.af = a.af;
    acq.center_lines = a.center_lines;
    validated([&] { acq.validate(h); });
    const int center = a.center_lines < 0 ? default_center_lines(h, a.af) : a.center_lines;
    echo("mask", {{"height", h}, {"width", w}, {"af", a.af}, {"center_lines", center}, {"seed", a.seed}});

    const SamplingMask m = gen_mask(h, w, a.af, center, a.seed);
    write_mask(a.out, m);
    if (!a.png.empty()) {
        GrayImage g{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w)};
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) g.pixels[static_cast<std::size_t>(r) * w + c] = m.row_sampled(r) ? 255 : 0;
        write_png(a.png, g);
    }
    std::cout << json{{"lines", m.lines()}, {"acceleration", m.acceleration()}}.dump() << '\n';
    return ok;
}

inline int train_command(const TrainArgs& a)
{
    TrainConfig cfg;
    cfg.variant = parse_variant(a.variant);
    cfg.shape = a.preset == "paper" ? NetworkShape::paper() : NetworkShape::desk();
    cfg.epochs = a.epochs > 0 ? a.epochs : (a.preset == "paper" ? 150 : 30);
    cfg.batch_size = a.batch_size;
    cfg.learning_rate = a.lr;
    cfg.seed = a.seed;
    validated([&] { cfg.validate(); });
    echo("train", {{"data", a.data},
                   {"out", a.out},
                   {"val", a.val},
                   {"variant", a.variant},
                   {"preset", a.preset},
                   {"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"lr", cfg.learning_rate},
                   {"seed", cfg.seed}});

    const std::vector<Sample> data = read_dataset(a.data);
    std::optional<std::vector<Sample>> validation;
    if (!a.val.empty()) validation = read_dataset(a.val);

    TrainResult result = train(data, cfg, validation ? &*validation : nullptr, [](const EpochReport& r) {
        std::cerr << "epoch " << r.epoch << " loss " << r.loss;
        if (r.validation_rlne >= 0.0) std::cerr << " val_rlne " << r.validation_rlne;
        std::cerr << '\n';
    });
    save_checkpoint(a.out, result.params, result.state, cfg);
    if (!a.history.empty())
        write_json(a.history, {{"loss", result.history.loss},
                               {"validation_rlne", result.history.validation_rlne},
                               {"max_update", result.history.max_update}});
    std::cout << "checkpoint written to " << a.out << '\n';
    return ok;
}

inline int recon(const ReconArgs& a)
{
    check_method(a.method);
    json config = method_json(a.method);
    config.update({{"data", a.data}, {"out", a.out}});
    echo("recon", config);

    const std::vector<Sample> data = read_dataset(a.data);
    const ReconstructionProcedure proc = make_procedure(a.method);
    const fs::path root(a.out);
    double seconds = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        const ComplexImage x = proc(data[k]);
        seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fs::create_directories(sample_dir(root, k));
        write_image(sample_dir(root, k) / "recon", x);
    }
    for (std::size_t k = data.size(); fs::is_directory(sample_dir(root, k)); ++k) fs::remove_all(sample_dir(root, k));
    write_json(root / "recon.json", {{"method", a.method.method},
                                     {"af", mean_acceleration(data)},
                                     {"count", data.size()},
                                     {"sec_per_slice", seconds / static_cast<double>(data.size())}});
    std::cout << data.size() << " reconstructions written to " << root.string() << '\n';
    return ok;
}

inline int eval(const EvalArgs& a)
{
    const bool from_dir = !a.recon.empty();
    if (!from_dir) check_method(a.method);
    json config = from_dir ? json{{"recon", a.recon}} : method_json(a.method);
    config.update({{"data", a.data}, {"report", a.report}});
    echo("eval", config);

    const std::vector<Sample> data = read_dataset(a.data);
    ReconReport report;
    if (from_dir) {
        const fs::path root(a.recon);
        const json meta = read_json(root / "recon.json");
        std::vector<ComplexImage> recons;
        for (std::size_t k = 0; k < data.size(); ++k) recons.push_back(read_image(sample_dir(root, k) / "recon"));
        std::size_t next = 0;
        report = evaluate(data, [&](const Sample&) { return recons[next++]; }, meta.at("method").get<std::string>(),
                          meta.at("af").get<double>());
        report.sec_per_slice = meta.at("sec_per_slice").get<double>();
    } else {
        report = evaluate(data, make_procedure(a.method), a.method.method, mean_acceleration(data));
    }
    write_json(a.report, to_json(report));
    std::cout << report.method << " rlne " << report.mean_rlne << " +- " << report.std_rlne << " mssim "
              << report.mean_mssim << " +- " << report.std_mssim << '\n';
    return ok;
}

inline int gradcheck(const GradCheckArgs& a)
{
    const NetworkShape shape{a.blocks, a.layers, a.channels, a.kernel};
    PhantomSpec phantom;
    phantom.height = phantom.width = a.size;
    phantom.smooth_phase = true;
    AcquisitionSpec acq;
    acq.coils = a.coils;
    acq.af = 2.0;
    acq.seed = a.seed;
    Variant variant{};
    validated([&] {
        shape.validate();
        phantom.validate();
        acq.validate(a.size);
        variant = parse_variant(a.variant);
    });
    if (!(a.step > 0.0) || a.entries < 1) throw UsageError("--step must be positive and --entries at least 1");
    echo("gradcheck", {{"size", a.size},
                       {"coils", a.coils},
                       {"blocks", a.blocks},
                       {"layers", a.layers},
                       {"channels", a.channels},
                       {"kernel", a.kernel},
                       {"variant", a.variant},
                       {"step", a.step},
                       {"entries", a.entries},
                       {"tolerance", a.tolerance},
                       {"seed", a.seed},
                       {"linear", a.linear}});

    const Sample sample = make_sample(phantom, acq, 0);
    NetworkParams params = xavier_init(shape, variant, a.seed);
    if (a.linear) params.activation = Activation::Identity;
    GradCheckOptions opts;
    opts.min_entries = a.entries;
    opts.seed = a.seed;
    const GradCheckReport r = grad_check(params, sample, a.step, opts);
    const bool pass = r.max_relative_error <= a.tolerance;
    std::cout << json{{"max_relative_error", r.max_relative_error},
                      {"max_absolute_error", r.max_absolute_error},
                      {"checked", r.checked},
                      {"excluded", r.excluded},
                      {"pass", pass}}
                     .dump()
              << '\n';
    return pass ? ok : failure;
}

inline int export_png(const ExportArgs& a)
{
    if (!(a.gain > 0.0)) throw UsageError("--gain must be positive");
    echo("export-png", {{"data", a.data}, {"recon", a.recon}, {"sample", a.sample}, {"out", a.out}, {"gain", a.gain}});

    const ComplexImage truth = read_image(sample_dir(a.data, a.sample) / "truth");
    const ComplexImage estimate = read_image(sample_dir(a.recon, a.sample) / "recon");
    if (!truth.same_shape(estimate)) throw ShapeError("reconstruction and truth differ in shape");
    const double peak = peak_magnitude(truth);
    if (peak == 0.0) throw Error("reference image is identically zero");
    const fs::path out(a.out);
    fs::create_directories(out);
    write_png(out / "truth.png", to_gray(truth, peak));
    write_png(out / "recon.png", to_gray(estimate, peak));
    write_png(out / "error.png", error_map(truth, estimate, a.gain));
    std::cout << "images written to " << out.string() << '\n';
    return ok;
}

inline int run(int argc, const char* const* argv)
{
    CLI::App app{"Parallel-imaging reconstruction with pISTA-SENSE and unrolled networks", "pista"};
    app.require_subcommand(1);
    std::function<int()> action;

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "generate a synthetic multi-coil dataset");
    c_sim->add_option("--out", sim.out, "dataset directory")->required();
    c_sim->add_option("--n", sim.n, "number of samples")->check(CLI::PositiveNumber)->capture_default_str();
    c_sim->add_option("--size", sim.size, "image height (and width unless --width)")->capture_default_str();
    c_sim->add_option("--width", sim.width, "image width");
    c_sim->add_option("--coils", sim.coils, "receive coils")->capture_default_str();
    c_sim->add_option("--af", sim.af, "acceleration factor")->capture_default_str();
    c_sim->add_option("--center-lines", sim.center_lines, "fully sampled center band");
    c_sim->add_option("--noise", sim.noise, "noise std per real component")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "base seed")->capture_default_str();
    c_sim->add_option("--first-index", sim.first_index, "index of the first sample")->capture_default_str();
    c_sim->add_flag("--phase,!--no-phase", sim.phase, "smooth phase on the phantom");
    c_sim->add_flag("--shepp-logan", sim.shepp_logan, "modified Shepp-Logan layout");
    c_sim->callback([&] { action = [&] { return simulate(sim); }; });

    MaskArgs mk;
    auto* c_mask = app.add_subcommand("mask", "draw one variable-density Cartesian mask");
    c_mask->add_option("--out", mk.out, "output base path (.hdr/.dat)")->required();
    c_mask->add_option("--png", mk.png, "also write the mask as a PNG");
    c_mask->add_option("--size", mk.size, "rows")->capture_default_str();
    c_mask->add_option("--width", mk.width, "columns");
    c_mask->add_option("--af", mk.af, "acceleration factor")->capture_default_str();
    c_mask->add_option("--center-lines", mk.center_lines, "fully sampled center band");
    c_mask->add_option("--seed", mk.seed, "seed")->capture_default_str();
    c_mask->callback([&] { action = [&] { return mask(mk); }; });

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "train an unrolled network");
    c_train->add_option("--data", tr.data, "training dataset")->required();
    c_train->add_option("--out", tr.out, "checkpoint path")->required();
    c_train->add_option("--val", tr.val, "validation dataset for per-epoch RLNE");
    c_train->add_option("--history", tr.history, "write loss and validation traces as JSON");
    c_train->add_option("--variant", tr.variant)->check(CLI::IsMember({"resnet", "net"}))->capture_default_str();
    c_train->add_option("--preset", tr.preset)->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
    c_train->add_option("--epochs", tr.epochs, "epochs (preset default: desk 30, paper 150)");
    c_train->add_option("--batch-size", tr.batch_size)->capture_default_str();
    c_train->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    c_train->add_option("--seed", tr.seed)->capture_default_str();
    c_train->callback([&] { action = [&] { return train_command(tr); }; });

    ReconArgs rc;
    auto* c_recon = app.add_subcommand("recon", "reconstruct every sample of a dataset");
    c_recon->add_option("--data", rc.data, "dataset directory")->required();
    c_recon->add_option("--out", rc.out, "output directory")->required();
    add_method_flags(*c_recon, rc.method);
    c_recon->callback([&] { action = [&] { return recon(rc); }; });

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "score reconstructions and write a JSON report");
    c_eval->add_option("--data", ev.data, "dataset directory")->required();
    c_eval->add_option("--recon", ev.recon, "directory written by recon (otherwise --method runs now)");
    c_eval->add_option("--report", ev.report, "report path")->required();
    add_method_flags(*c_eval, ev.method);
    c_eval->callback([&] { action = [&] { return eval(ev); }; });

    GradCheckArgs gc;
    auto* c_grad = app.add_subcommand("gradcheck", "compare backprop against central differences");
    c_grad->add_option("--size", gc.size)->capture_default_str();
    c_grad->add_option("--coils", gc.coils)->capture_default_str();
    c_grad->add_option("--blocks", gc.blocks)->capture_default_str();
    c_grad->add_option("--layers", gc.layers)->capture_default_str();
    c_grad->add_option("--channels", gc.channels)->capture_default_str();
    c_grad->add_option("--kernel", gc.kernel)->capture_default_str();
    c_grad->add_option("--variant", gc.variant)->check(CLI::IsMember({"resnet", "net"}))->capture_default_str();
    c_grad->add_option("--step", gc.step)->capture_default_str();
    c_grad->add_option("--entries", gc.entries)->capture_default_str();
    c_grad->add_option("--tolerance", gc.tolerance)->capture_default_str();
    c_grad->add_option("--seed", gc.seed)->capture_default_str();
    c_grad->add_flag("--linear", gc.linear, "replace ReLU by the identity");
    c_grad->callback([&] { action = [&] { return gradcheck(gc); }; });

    ExportArgs ex;
    auto* c_png = app.add_subcommand("export-png", "write truth, reconstruction and error-map PNGs");
    c_png->add_option("--data", ex.data, "dataset directory")->required();
    c_png->add_option("--recon", ex.recon, "directory written by recon")->required();
    c_png->add_option("--out", ex.out, "output directory")->required();
    c_png->add_option("--sample", ex.sample)->capture_default_str();
    c_png->add_option("--gain", ex.gain, "error-map amplification")->capture_default_str();
    c_png->callback([&] { action = [&] { return export_png(ex); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return usage;
    }

    try {
        return action();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
}

} // namespace pista::cli
