#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "helpers.hpp"
#include "vscene/generator.hpp"
#include "vscene/image.hpp"
#include "vscene/io.hpp"

using namespace vscene;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(VSCENE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("no-such-command"), 1);
    EXPECT_EQ(run("render --scene"), 1);
    EXPECT_EQ(run("fit --method sideways --image x.png --out y.json"), 1);
    EXPECT_EQ(run("--version"), 0);
}

TEST(Cli, RuntimeFailure) {
    const auto dir = testutil::temp_dir("cli_fail");
    EXPECT_EQ(run("render --scene " + (dir / "missing.json").string() + " --out " + (dir / "o.png").string()), 2);
}

TEST(Cli, RenderWritesPng) {
    const auto dir = testutil::temp_dir("cli_render");
    Scene s;
    s.width = s.height = 40;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.3, 0.0, 2, 3));
    save_scene(s, dir / "s.json");
    save_bank(builtin_bank(), dir / "b.json");
    ASSERT_EQ(run("render --scene " + (dir / "s.json").string() + " --bank " + (dir / "b.json").string() + " --out " +
                  (dir / "o.png").string() + " --labels " + (dir / "l.png").string()),
              0);
    EXPECT_EQ(read_png(dir / "o.png"), quantized(render(s, builtin_bank(), {})));
    EXPECT_EQ(read_label_png(dir / "l.png"), render_labels(s, builtin_bank(), {}));
}

TEST(Cli, GenDatasetDeterministic) {
    const auto dir = testutil::temp_dir("cli_gen");
    const std::string base = "gen-dataset --count 10 --seed 7 --size 32 --out ";
    ASSERT_EQ(run(base + (dir / "a").string() + " --threads 1"), 0);
    ASSERT_EQ(run(base + (dir / "b").string() + " --threads 4"), 0);
    EXPECT_EQ(testutil::snapshot(dir / "a"), testutil::snapshot(dir / "b"));
    EXPECT_EQ(load_manifest(dir / "a").size(), 10u);
}

TEST(Cli, FitAndEval) {
    const auto dir = testutil::temp_dir("cli_fit");
    ASSERT_EQ(run("gen-dataset --count 2 --seed 3 --size 48 --max-objects 1 --out " + (dir / "d").string()), 0);
    ASSERT_EQ(run("fit --method from-init --dataset " + (dir / "d").string() + " --init " +
                  (dir / "d" / "scenes" / "000000.json").string() + " --out " + (dir / "f").string()),
              2);  // from-init fits a single image
    ASSERT_EQ(run("fit --method opt-iter --dataset " + (dir / "d").string() + " --out " + (dir / "f").string()), 0);
    ASSERT_EQ(run("eval --pred " + (dir / "f").string() + " --dataset " + (dir / "d").string() + " --out " +
                  (dir / "r.csv").string()),
              0);
    const std::string csv = testutil::read_file(dir / "r.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,mae,mse,ssim,iou,ari");
}
