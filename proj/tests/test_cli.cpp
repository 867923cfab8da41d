#include "helpers.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
    int status = 0;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(GRAMTRAJ_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    r.status = ::pclose(pipe);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string small_synth =
    " synth.subjects=4 synth.sequences_per_subject=5 synth.min_frames=30 synth.max_frames=34";

}  // namespace

TEST_CASE("command line workflow") {
    const auto dir = testing::temp_dir("cli");
    const auto data = dir / "data";
    REQUIRE(run("synth --out " + data.string() + small_synth).status == 0);
    const auto manifest = (data / "manifest.csv").string();
    CHECK(fs::exists(manifest));

    const auto v = run("validate " + manifest);
    CHECK(v.status == 0);
    CHECK(v.out.find("sequences_ok,20") != std::string::npos);

    const std::string common = " data.manifest=" + manifest +
                               " trajectory.sampling=0.5 evaluation.strategies=late,whole_face";
    const auto k1 = run("kernel --out " + (dir / "k").string() + common);
    REQUIRE(k1.status == 0);
    CHECK(k1.out.find("cache_hits,0") != std::string::npos);
    const auto k2 = run("kernel --out " + (dir / "k").string() + common);
    REQUIRE(k2.status == 0);
    CHECK(k2.out.find("cache_misses,0") != std::string::npos);
    CHECK(k2.out.find("cache_hit_rate,1\n") != std::string::npos);

    const auto e1 = run("evaluate --out " + (dir / "e1").string() + " --models-out " +
                        (dir / "models").string() + common);
    REQUIRE(e1.status == 0);
    const auto e2 = run("evaluate --out " + (dir / "e2").string() + common);
    REQUIRE(e2.status == 0);
    for (const auto* name : {"summary_late.csv", "predictions_late.csv", "folds_whole_face.csv",
                             "comparison.csv"}) {
        const auto a = slurp(dir / "e1" / name);
        CHECK_MESSAGE(!a.empty(), name);
        CHECK_MESSAGE(a == slurp(dir / "e2" / name), name);
    }
    CHECK(slurp(dir / "e1" / "comparison.csv").find("LOSO cross validation,Late fusion,") !=
          std::string::npos);

    const auto p = run("predict --out " + (dir / "p").string() + " --model " +
                       (dir / "models" / "model_late.txt").string() + " " + manifest);
    CHECK(p.status == 0);
    CHECK(slurp(dir / "p" / "predictions.csv").rfind("sequence_id,subject_id,label,prediction\n", 0) ==
          0);
}

TEST_CASE("command line errors exit non-zero") {
    const auto dir = testing::temp_dir("cli_errors");
    CHECK(run("synth --out " + dir.string() + " no.such.key=1").status != 0);
    CHECK(run("synth --out " + dir.string() + " alignment.sigma=-2").status != 0);
    CHECK(run("validate " + (dir / "missing.csv").string()).status != 0);
    CHECK(run("evaluate --out " + dir.string()).status != 0);  // no manifest configured
    CHECK(run("").status != 0);
}
