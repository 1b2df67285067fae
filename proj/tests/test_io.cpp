#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>

#include "pcreg/checkpoint.hpp"
#include "pcreg/cloud_io.hpp"
#include "pcreg/config.hpp"
#include "pcreg/manifest.hpp"
#include "test_util.hpp"

using namespace pcreg;
using namespace pcreg::testutil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pcreg_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

}  // namespace

TEST_CASE("cloud files round-trip within the declared ASCII precision") {
    TempDir dir;
    Rng rng(1);
    const PointCloud cloud = random_cloud(1000, rng, 150.0);
    const fs::path file = dir.path / "cloud.txt";
    save_cloud(file, cloud);
    const PointCloud back = load_cloud(file);
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            const double ref = cloud[i][a];
            CHECK(std::abs(back[i][a] - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("a single-point file loads to a cloud of length one") {
    TempDir dir;
    const fs::path file = dir.path / "one.txt";
    write_text(file, "xyz mm 1\n1.5 -2.25 3.125\n");
    const PointCloud c = load_cloud(file);
    REQUIRE(c.size() == 1);
    CHECK(c[0] == Vec3{1.5, -2.25, 3.125});
}

TEST_CASE("count mismatches and malformed lines are rejected with context") {
    TempDir dir;
    const fs::path short_file = dir.path / "short.txt";
    write_text(short_file, "xyz mm 3\n1 2 3\n4 5 6\n");
    CHECK_THROWS_WITH_AS(load_cloud(short_file), doctest::Contains("header count"),
                         std::runtime_error);

    const fs::path bad_line = dir.path / "bad.txt";
    write_text(bad_line, "xyz mm 2\n1 2 3\n4 five 6\n");
    CHECK_THROWS_WITH_AS(load_cloud(bad_line), doctest::Contains(":3:"), std::runtime_error);

    const fs::path nan_file = dir.path / "nan.txt";
    write_text(nan_file, "xyz mm 1\nnan 0 0\n");
    CHECK_THROWS_AS(load_cloud(nan_file), std::runtime_error);

    const fs::path bad_header = dir.path / "hdr.txt";
    write_text(bad_header, "abc mm 1\n0 0 0\n");
    CHECK_THROWS_WITH_AS(load_cloud(bad_header), doctest::Contains("header"), std::runtime_error);

    const fs::path extra = dir.path / "extra.txt";
    write_text(extra, "xyz mm 1\n0 0 0 0\n");
    CHECK_THROWS_AS(load_cloud(extra), std::runtime_error);

    CHECK_THROWS_AS(load_cloud(dir.path / "missing.txt"), std::runtime_error);
}

TEST_CASE("checkpoints round-trip through the float32 file format") {
    TempDir dir;
    const ModelConfig cfg;  // defaults
    ModelParameters params = ModelParameters::initialize(cfg);
    Rng rng(3);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += rng.uniform(-0.5, 0.5);

    AdamState opt(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        opt.m[i] = rng.uniform(-0.1, 0.1);
        opt.v[i] = rng.uniform(0.0, 0.01);
    }
    opt.t = 17;

    const fs::path file = dir.path / "model.ckpt";
    save_checkpoint(file, params, opt, 423, cfg.hash());
    const Checkpoint ck = load_checkpoint(file, cfg.hash());

    REQUIRE(ck.params.size() == params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(ck.params[i] == static_cast<double>(static_cast<float>(params[i])));
        CHECK(ck.opt.m[i] == static_cast<double>(static_cast<float>(opt.m[i])));
        CHECK(ck.opt.v[i] == static_cast<double>(static_cast<float>(opt.v[i])));
    }
    CHECK(ck.opt.t == 17);
    CHECK(ck.step == 423);
    CHECK(ck.config_hash == cfg.hash());

    CHECK_THROWS_WITH_AS(load_checkpoint(file, cfg.hash() + 1), doctest::Contains("hash"),
                         std::runtime_error);

    // Truncated file.
    std::ofstream trunc(dir.path / "trunc.ckpt", std::ios::binary);
    trunc << "PCREGCK1xx";
    trunc.close();
    CHECK_THROWS_AS(load_checkpoint(dir.path / "trunc.ckpt"), std::runtime_error);

    write_text(dir.path / "junk.ckpt", "not a checkpoint at all");
    CHECK_THROWS_AS(load_checkpoint(dir.path / "junk.ckpt"), std::runtime_error);
}

TEST_CASE("manifests validate referenced files and unique ids") {
    TempDir dir;
    Rng rng(5);
    save_cloud(dir.path / "f.txt", random_cloud(10, rng));
    save_cloud(dir.path / "m.txt", random_cloud(10, rng));

    DatasetManifest manifest;
    manifest.root = dir.path;
    ManifestEntry e;
    e.id = "c0";
    e.fixed = "f.txt";
    e.moving = "m.txt";
    e.split = Split::kTest;
    manifest.entries.push_back(e);
    save_manifest(dir.path / "manifest.json", manifest);

    const DatasetManifest loaded = load_manifest(dir.path / "manifest.json");
    REQUIRE(loaded.entries.size() == 1);
    CHECK(loaded.entries[0].id == "c0");
    CHECK(loaded.entries[0].split == Split::kTest);
    CHECK(loaded.with_split(Split::kTrain).empty());

    const RegistrationCase c = load_case(loaded, loaded.entries[0]);
    CHECK(c.fixed.size() == 10);

    // Duplicate ids rejected.
    manifest.entries.push_back(e);
    save_manifest(dir.path / "dup.json", manifest);
    CHECK_THROWS_WITH_AS(load_manifest(dir.path / "dup.json"), doctest::Contains("duplicate"),
                         std::runtime_error);

    // Missing referenced file rejected.
    write_text(dir.path / "missing.json",
               R"({"units":"mm","cases":[{"id":"x","fixed":"f.txt","moving":"gone.txt"}]})");
    CHECK_THROWS_WITH_AS(load_manifest(dir.path / "missing.json"), doctest::Contains("missing"),
                         std::runtime_error);
}

TEST_CASE("config parsing is strict about unknown keys") {
    TempDir dir;
    const fs::path good = dir.path / "good.json";
    write_text(good, R"({"seed": 9, "train": {"lambda_sup": 2.5, "n_points": 32,
                          "n_points_highres": 64}})");
    const ExperimentConfig cfg = load_config(good);
    CHECK(cfg.seed == 9);
    CHECK(cfg.train.lambda_sup == 2.5);
    CHECK(cfg.train.seed == 9);

    const fs::path bad = dir.path / "bad.json";
    write_text(bad, R"({"train": {"lambda_supx": 1}})");
    CHECK_THROWS_WITH_AS(load_config(bad), doctest::Contains("train.lambda_supx"),
                         std::runtime_error);

    const fs::path bad_top = dir.path / "bad_top.json";
    write_text(bad_top, R"({"seeed": 1})");
    CHECK_THROWS_WITH_AS(load_config(bad_top), doctest::Contains("seeed"), std::runtime_error);
}

TEST_CASE("printed config round-trips through the parser") {
    TempDir dir;
    ExperimentConfig cfg;
    cfg.finalize();
    const std::string dumped = config_to_json(cfg);
    const fs::path file = dir.path / "full.json";
    write_text(file, dumped);
    const ExperimentConfig back = load_config(file);
    CHECK(back.seed == cfg.seed);
    CHECK(back.train.lambda_con == cfg.train.lambda_con);
    CHECK(back.model.k == cfg.model.k);
    CHECK(back.synth.pool_points == cfg.synth.pool_points);
    CHECK(config_to_json(back) == dumped);
}
