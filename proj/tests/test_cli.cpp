#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("entlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const std::string cmd = std::string(ENTLAB_BIN) + " " + args + " >" + stdout_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-data and inject-noise are reproducible") {
  Sandbox sb;
  REQUIRE(run("gen-data --alphabet 6 --n 40 --len-min 2 --len-max 5 --seed 3 --out " + sb.path("a.jsonl") +
              " --heldout-n 10 --heldout-out " + sb.path("h.jsonl")) == 0);
  REQUIRE(run("gen-data --alphabet 6 --n 40 --len-min 2 --len-max 5 --seed 3 --out " + sb.path("b.jsonl") +
              " --heldout-n 10 --heldout-out " + sb.path("h2.jsonl")) == 0);
  CHECK(slurp(sb.path("a.jsonl")) == slurp(sb.path("b.jsonl")));
  CHECK(slurp(sb.path("h.jsonl")) == slurp(sb.path("h2.jsonl")));
  CHECK(count_lines(slurp(sb.path("a.jsonl"))) == 41);
  CHECK(count_lines(slurp(sb.path("h.jsonl"))) == 11);

  REQUIRE(run("inject-noise --in " + sb.path("a.jsonl") + " --out " + sb.path("n1.jsonl") +
              " --kind copy --rate 0.5 --mode append --seed 2") == 0);
  REQUIRE(run("inject-noise --in " + sb.path("a.jsonl") + " --out " + sb.path("n2.jsonl") +
              " --kind copy --rate 0.5 --mode append --seed 2") == 0);
  CHECK(slurp(sb.path("n1.jsonl")) == slurp(sb.path("n2.jsonl")));
  CHECK(count_lines(slurp(sb.path("n1.jsonl"))) == 61);
}

TEST_CASE("train, eval and score produce stable outputs") {
  Sandbox sb;
  REQUIRE(run("gen-data --alphabet 6 --n 60 --len-min 2 --len-max 5 --seed 4 --out " + sb.path("train.jsonl") +
              " --heldout-n 10 --heldout-out " + sb.path("eval.jsonl")) == 0);
  spit(sb.path("cfg.json"),
       R"({"model":{"embed_dim":4,"hidden_dim":8},"train":{"epochs":2,"batch_size":8,"seed":5,"eval_every":4},)"
       R"("objective":{"strategy":"ent_threshold","threshold":1.2},)"
       R"("data":{"train":"train.jsonl","eval":"eval.jsonl"},"noise":{"kind":"substitution","rate":0.3,"seed":1}})");
  REQUIRE(run("train --config " + sb.path("cfg.json") + " --out-dir " + sb.path("r1"), sb.path("r1.json")) == 0);
  REQUIRE(run("train --config " + sb.path("cfg.json") + " --out-dir " + sb.path("r2"), sb.path("r2.json")) == 0);
  for (const char* f : {"model.ckpt", "dynamics.csv", "metrics.csv"}) {
    const auto a = slurp(sb.path(std::string("r1/") + f));
    CHECK_MESSAGE(!a.empty(), f);
    CHECK_MESSAGE(a == slurp(sb.path(std::string("r2/") + f)), f);
  }
  CHECK(slurp(sb.path("r1.json")) == slurp(sb.path("r2.json")));
  const auto dyn = slurp(sb.path("r1/dynamics.csv"));
  CHECK(dyn.rfind("iteration,mean_top10pct_error_norm,truncated_fraction,train_loss\n", 0) == 0);
  CHECK(count_lines(dyn) == 1 + 16);  // 2 epochs of 8 batches
  const auto report = nlohmann::json::parse(slurp(sb.path("r1.json")));
  CHECK(report.contains("perplexity"));

  REQUIRE(run("inject-noise --in " + sb.path("eval.jsonl") + " --out " + sb.path("noisy.jsonl") +
              " --kind substitution --rate 0.4 --seed 3") == 0);
  REQUIRE(run("eval --checkpoint " + sb.path("r1/model.ckpt") + " --corpus " + sb.path("noisy.jsonl"),
              sb.path("ev.json")) == 0);
  const auto ev = nlohmann::json::parse(slurp(sb.path("ev.json")));
  CHECK(ev.contains("separation"));

  REQUIRE(run("score --checkpoint " + sb.path("r1/model.ckpt") + " --corpus " + sb.path("noisy.jsonl") +
              " --out " + sb.path("s.tsv")) == 0);
  const auto tsv = slurp(sb.path("s.tsv"));
  CHECK(tsv.rfind("example_id\tposition\ttoken\tnll\tl1\tl2\trenyi2\tnoise_label\thighlight_level\n", 0) == 0);
  CHECK(fs::exists(sb.path("s.tsv.hist.csv")));
}

TEST_CASE("exit codes") {
  Sandbox sb;
  CHECK(run("") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("frobnicate") == 1);
  CHECK(run("gen-data --n 0 --out " + sb.path("x.jsonl")) == 1);
  CHECK(run("gen-data --n 5") == 1);
  CHECK(run("inject-noise --in " + sb.path("missing.jsonl") + " --out " + sb.path("o.jsonl") +
            " --kind copy --rate 0.1") == 2);
  spit(sb.path("bad.jsonl"), "{\"tokens\":[\"<pad>\",\"<bos>\",\"<eos>\",\"<sep>\",\"a\"]}\n{oops\n");
  CHECK(run("inject-noise --in " + sb.path("bad.jsonl") + " --out " + sb.path("o.jsonl") +
            " --kind copy --rate 0.1") == 2);
  REQUIRE(run("gen-data --alphabet 4 --n 10 --out " + sb.path("ok.jsonl")) == 0);
  CHECK(run("inject-noise --in " + sb.path("ok.jsonl") + " --out " + sb.path("o.jsonl") +
            " --kind copy --rate 1.5") == 1);
  CHECK(run("inject-noise --in " + sb.path("ok.jsonl") + " --out " + sb.path("o.jsonl") +
            " --kind substitution --rate 0.1 --mode append") == 1);
  spit(sb.path("cfg.json"), R"({"data":{"train":"ok.jsonl"},"model":{"layers":2}})");
  CHECK(run("train --config " + sb.path("cfg.json") + " --out-dir " + sb.path("o")) == 1);
  CHECK(run("train --config " + sb.path("nope.json") + " --out-dir " + sb.path("o")) == 2);
  spit(sb.path("div.json"),
       R"({"data":{"train":"ok.jsonl"},"train":{"optimizer":"sgd","learning_rate":1e308,"epochs":3,"batch_size":2}})");
  CHECK(run("train --config " + sb.path("div.json") + " --out-dir " + sb.path("d")) == 3);
  CHECK(run("eval --checkpoint " + sb.path("ok.jsonl") + " --corpus " + sb.path("ok.jsonl")) == 2);
}

TEST_CASE("sweep writes one row per cell") {
  Sandbox sb;
  spit(sb.path("cfg.json"), R"({"model":{"embed_dim":4,"hidden_dim":8},"train":{"epochs":1,"batch_size":8}})");
  const std::string common = " --config " + sb.path("cfg.json") +
                             " --alphabet 6 --n-train 40 --n-heldout 10 --len-min 2 --len-max 4 --seeds 1,2";
  REQUIRE(run("sweep --mode noise-robustness --out " + sb.path("r.csv") + common +
              " --kinds copy,shuffle --rates 0.5 --strategies mle,ent_threshold --noise-mode append") == 0);
  const auto csv = slurp(sb.path("r.csv"));
  CHECK(count_lines(csv) == 1 + 4);
  REQUIRE(run("sweep --mode noise-robustness --out " + sb.path("r2.csv") + common +
              " --kinds copy,shuffle --rates 0.5 --strategies mle,ent_threshold --noise-mode append") == 0);
  CHECK(slurp(sb.path("r2.csv")) == csv);
  REQUIRE(run("sweep --mode prune-retrain --out " + sb.path("p.csv") + common + " --fractions 0.2,0.4") == 0);
  CHECK(count_lines(slurp(sb.path("p.csv"))) == 1 + 6);
  CHECK(run("sweep --mode other --out " + sb.path("x.csv") + common) == 1);
}

}
