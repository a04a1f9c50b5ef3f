#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "pista");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return pista::cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "pista_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

/// Every regular file under root, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

} // namespace

TEST(Cli, SimulateWritesDatasetAndIsReproducible)
{
    const fs::path a = scratch("sim_a");
    const fs::path b = scratch("sim_b");
    const std::vector<std::string> flags{"--n", "50", "--size", "64", "--coils", "4", "--af", "4", "--seed", "7"};
    auto args = flags;
    args.insert(args.begin(), {"simulate", "--out", a.string()});
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(pista::count_samples(a), 50u);
    EXPECT_TRUE(fs::exists(a / "dataset.json"));
    const auto s = pista::read_sample(pista::sample_dir(a, 49));
    EXPECT_EQ(s.truth.height(), 64);
    EXPECT_EQ(s.coils.coils(), 4);
    EXPECT_EQ(s.mask.lines().size(), 16u);

    args = flags;
    args.insert(args.begin(), {"simulate", "--out", b.string()});
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(tree(a), tree(b));
}

TEST(Cli, SimulateTrimsStaleSamples)
{
    const fs::path d = scratch("sim_trim");
    ASSERT_EQ(run({"simulate", "--out", d.string(), "--n", "4", "--size", "16", "--coils", "2"}), 0);
    ASSERT_EQ(run({"simulate", "--out", d.string(), "--n", "2", "--size", "16", "--coils", "2"}), 0);
    EXPECT_EQ(pista::count_samples(d), 2u);
}

TEST(Cli, ReconAndEvalZeroFill)
{
    const fs::path data = scratch("eval_data");
    const fs::path out = scratch("eval_recon");
    const fs::path report = scratch("eval_report") / "report.json";
    ASSERT_EQ(run({"simulate", "--out", data.string(), "--n", "3", "--size", "32", "--seed", "3"}), 0);
    const auto before = tree(data);
    ASSERT_EQ(run({"recon", "--data", data.string(), "--method", "zerofill", "--out", out.string()}), 0);
    ASSERT_EQ(run({"eval", "--data", data.string(), "--recon", out.string(), "--report", report.string()}), 0);
    const auto j = nlohmann::json::parse(slurp(report));
    const double mean = j.at("mean_rlne").get<double>();
    EXPECT_GT(mean, 0.0);
    EXPECT_LT(mean, 1.0);
    EXPECT_EQ(j.at("method"), "zerofill");
    EXPECT_EQ(j.at("per_image").size(), 3u);
    EXPECT_EQ(tree(data), before);

    // evaluating the method directly gives the same scores
    const fs::path direct = scratch("eval_direct") / "r.json";
    ASSERT_EQ(run({"eval", "--data", data.string(), "--method", "zerofill", "--report", direct.string()}), 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(direct)).at("mean_rlne").get<double>(), mean);

    // reconstructions themselves are byte-identical across runs
    const fs::path again = scratch("eval_recon_again");
    ASSERT_EQ(run({"recon", "--data", data.string(), "--method", "zerofill", "--out", again.string()}), 0);
    for (std::size_t k = 0; k < 3; ++k)
        EXPECT_EQ(slurp(pista::sample_dir(out, k) / "recon.dat"), slurp(pista::sample_dir(again, k) / "recon.dat"));

    const fs::path png = scratch("eval_png");
    ASSERT_EQ(run({"export-png", "--data", data.string(), "--recon", out.string(), "--out", png.string()}), 0);
    for (const char* f : {"truth.png", "recon.png", "error.png"}) {
        const std::string bytes = slurp(png / f);
        ASSERT_GT(bytes.size(), 8u);
        EXPECT_EQ(bytes.substr(1, 3), "PNG");
    }
}

TEST(Cli, PistaReconBeatsZeroFill)
{
    const fs::path data = scratch("pista_data");
    ASSERT_EQ(run({"simulate", "--out", data.string(), "--n", "2", "--size", "32", "--seed", "4"}), 0);
    const fs::path zf = scratch("pista_zf") / "r.json";
    const fs::path ista = scratch("pista_ista") / "r.json";
    ASSERT_EQ(run({"eval", "--data", data.string(), "--method", "zerofill", "--report", zf.string()}), 0);
    ASSERT_EQ(run({"eval", "--data", data.string(), "--method", "pista", "--report", ista.string()}), 0);
    EXPECT_LT(nlohmann::json::parse(slurp(ista)).at("mean_rlne").get<double>(),
              nlohmann::json::parse(slurp(zf)).at("mean_rlne").get<double>());
}

TEST(Cli, TrainTwiceGivesIdenticalCheckpoints)
{
    const fs::path data = scratch("train_data");
    ASSERT_EQ(run({"simulate", "--out", data.string(), "--n", "3", "--size", "32", "--seed", "5"}), 0);
    const fs::path a = scratch("train_a") / "net.ckpt";
    const fs::path b = scratch("train_b") / "net.ckpt";
    const fs::path history = scratch("train_hist") / "h.json";
    fs::create_directories(a.parent_path());
    fs::create_directories(b.parent_path());
    ASSERT_EQ(run({"train", "--data", data.string(), "--out", a.string(), "--preset", "desk", "--epochs", "2", "--seed",
                   "9", "--val", data.string(), "--history", history.string()}),
              0);
    ASSERT_EQ(run({"train", "--data", data.string(), "--out", b.string(), "--preset", "desk", "--epochs", "2", "--seed",
                   "9"}),
              0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(nlohmann::json::parse(slurp(history)).at("loss").size(), 2u);

    const fs::path out = scratch("train_recon");
    ASSERT_EQ(run({"recon", "--data", data.string(), "--method", "net", "--checkpoint", a.string(), "--out",
                   out.string()}),
              0);
    EXPECT_EQ(pista::count_samples(out), 3u);
}

TEST(Cli, MaskAndGradcheck)
{
    const fs::path m = scratch("mask") / "m";
    fs::create_directories(m.parent_path());
    ASSERT_EQ(run({"mask", "--size", "64", "--af", "4", "--seed", "1", "--out", m.string(), "--png",
                   (m.parent_path() / "m.png").string()}),
              0);
    EXPECT_EQ(pista::read_mask(m).lines().size(), 16u);
    EXPECT_TRUE(fs::exists(m.parent_path() / "m.png"));
    EXPECT_EQ(run({"gradcheck", "--entries", "30"}), 0);
    EXPECT_EQ(run({"gradcheck", "--entries", "30", "--linear", "--tolerance", "1e-6"}), 0);
}

TEST(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"simulate", "--out", "x", "--bogus"}), 2);
    EXPECT_EQ(run({"simulate"}), 2);
    EXPECT_EQ(run({"simulate", "--out", scratch("odd").string(), "--size", "15"}), 2);
    EXPECT_EQ(run({"recon", "--data", "d", "--out", "o", "--method", "net"}), 2);
    EXPECT_EQ(run({"recon", "--data", "d", "--out", "o", "--method", "magic"}), 2);
    EXPECT_EQ(run({"recon", "--data", "d", "--out", "o", "--method", "pista", "--gamma", "3"}), 2);
    EXPECT_EQ(run({"train", "--data", "d", "--out", "o", "--variant", "cnn"}), 2);
    EXPECT_EQ(run({"train", "--data", "d", "--out", "o", "--batch-size", "0"}), 2);
    EXPECT_EQ(run({"--help"}), 0);
}

TEST(Cli, RuntimeFailuresExitOne)
{
    const fs::path missing = scratch("missing");
    EXPECT_EQ(run({"recon", "--data", missing.string(), "--out", scratch("o").string()}), 1);
    EXPECT_EQ(run({"train", "--data", missing.string(), "--out", (scratch("o2") / "c").string()}), 1);
    EXPECT_EQ(run({"eval", "--data", missing.string(), "--report", (scratch("o3") / "r.json").string()}), 1);
}
