#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alkit/io.hpp"
#include "alkit/matrix.hpp"
#include "alkit/pool.hpp"
#include "testutil.hpp"

using namespace alkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs the installed binary, captures combined output, returns the exit code.
struct CmdResult {
  int code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string log = testutil::temp_path("cli_out") + ".log";
  const std::string cmd =
      std::string("\"") + ALKIT_BIN + "\" " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  CmdResult r;
  if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.output = read_text(log);
  return r;
}

std::string fresh_dir(const std::string& tag) {
  const std::string dir = testutil::temp_path(tag);
  fs::create_directories(dir);
  return dir;
}

std::string cls_pool_file(int n_train, int n_test, std::uint64_t seed) {
  Pool pool = testutil::make_cluster_pool(n_train, n_test, 2, 20, 8, 0.3,
                                          seed);
  const std::string path = testutil::temp_path("pool_cls") + ".jsonl";
  save_pool(pool, path);
  return path;
}

std::string seq_pool_file(int n_train, int n_test, std::uint64_t seed) {
  Pool pool = testutil::make_seq_pool(n_train, n_test, 20, 5, 4, 3, 0.3, seed);
  const std::string path = testutil::temp_path("pool_seq") + ".jsonl";
  save_pool(pool, path);
  return path;
}

std::string int_list_file(const std::vector<int>& ids,
                          const std::string& tag) {
  const std::string path = testutil::temp_path(tag) + ".json";
  write_text(path, json(ids).dump() + "\n");
  return path;
}

}  // namespace

TEST_CASE("--version reports the toolkit version and exits 0") {
  CmdResult r = run_cli("--version");
  CHECK(r.code == 0);
  CHECK(r.output.find("0.1.0") != std::string::npos);
}

TEST_CASE("a bare invocation asks for a subcommand and fails") {
  CmdResult r = run_cli("");
  CHECK(r.code == 2);
}

TEST_CASE("select picks a batch and replays byte-identical outputs") {
  const std::string pool = cls_pool_file(60, 10, 301);
  std::vector<int> labeled(20);
  for (int i = 0; i < 20; ++i) labeled[i] = i;
  const std::string labeled_path = int_list_file(labeled, "labeled");
  const std::string ids_a = testutil::temp_path("sel_ids_a") + ".json";
  const std::string scores_a = testutil::temp_path("sel_scores_a") + ".csv";

  const std::string base =
      "select --pool " + pool +
      " --task classification --vocab-size 20 --num-classes 2"
      " --method margin --budget 5 --seed 9 --labeled " + labeled_path +
      " --hidden 8 --epochs 2 --pad-len 8";
  CmdResult r = run_cli(base + " --out-ids " + ids_a + " --out-scores " +
                        scores_a);
  CHECK(r.code == 0);

  const json picked = json::parse(read_text(ids_a));
  REQUIRE(picked.is_array());
  CHECK(picked.size() == 5);
  for (const auto& id : picked) {
    CHECK(id.get<int>() >= 20);  // never re-picks a labeled item
    CHECK(id.get<int>() < 60);   // never leaves the train split
  }

  const std::string scores = read_text(scores_a);
  CHECK(scores.rfind("index,score\n", 0) == 0);
  CHECK(std::count(scores.begin(), scores.end(), '\n') == 6);

  // Identical invocation, fresh output paths: byte-identical artifacts.
  const std::string ids_b = testutil::temp_path("sel_ids_b") + ".json";
  const std::string scores_b = testutil::temp_path("sel_scores_b") + ".csv";
  CmdResult r2 = run_cli(base + " --out-ids " + ids_b + " --out-scores " +
                         scores_b);
  CHECK(r2.code == 0);
  CHECK(read_text(ids_b) == read_text(ids_a));
  CHECK(read_text(scores_b) == scores);
}

TEST_CASE("select without a model works for token-view clustering") {
  const std::string pool = cls_pool_file(40, 8, 303);
  const std::string ids = testutil::temp_path("sel_km_ids") + ".json";
  const std::string scores = testutil::temp_path("sel_km_scores") + ".csv";
  CmdResult r = run_cli(
      "select --pool " + pool +
      " --task classification --vocab-size 20 --num-classes 2"
      " --method kmeans --feature token --budget 4 --seed 3 --pad-len 8"
      " --out-ids " + ids + " --out-scores " + scores);
  CHECK(r.code == 0);
  CHECK(json::parse(read_text(ids)).size() == 4);
}

TEST_CASE("select maps error kinds to distinct exit codes") {
  const std::string pool = cls_pool_file(30, 6, 305);

  // Unknown method: configuration error.
  CmdResult unknown = run_cli(
      "select --pool " + pool +
      " --task classification --vocab-size 20 --num-classes 2"
      " --method annealing --budget 2 --out-ids " +
      testutil::temp_path("x") + ".json --out-scores " +
      testutil::temp_path("x") + ".csv");
  CHECK(unknown.code == 2);
  CHECK(unknown.output.find("unknown acquisition method") !=
        std::string::npos);

  // Probability ranking on a sequence task: capability error.
  const std::string seq = seq_pool_file(30, 6, 306);
  std::vector<int> labeled(10);
  for (int i = 0; i < 10; ++i) labeled[i] = i;
  CmdResult margin_seq = run_cli(
      "select --pool " + seq +
      " --task sequence_generation --vocab-size 20 --method margin"
      " --budget 2 --labeled " + int_list_file(labeled, "seq_lab") +
      " --epochs 1 --out-ids " + testutil::temp_path("x") +
      ".json --out-scores " + testutil::temp_path("x") + ".csv");
  CHECK(margin_seq.code == 3);

  // Missing pool file: I/O error.
  CmdResult missing = run_cli(
      "select --pool /nonexistent/pool.jsonl --task classification"
      " --method random --budget 2 --out-ids " +
      testutil::temp_path("x") + ".json --out-scores " +
      testutil::temp_path("x") + ".csv");
  CHECK(missing.code == 4);

  // Bad flag: CLI parse error.
  CmdResult flag = run_cli("select --no-such-flag");
  CHECK(flag.code == 2);
}

TEST_CASE("bald against an external adapter is a capability error") {
  Pool pool = testutil::make_cluster_pool(20, 4, 2, 20, 8, 0.3, 307);
  const std::string pool_path = testutil::temp_path("pool_ext") + ".jsonl";
  save_pool(pool, pool_path);

  const std::size_t n = pool.items.size();
  Matrix proba(n, 2, 0.5);
  Matrix embed(n, 3, 1.0);
  const std::string proba_path = testutil::temp_path("ext_proba") + ".csv";
  const std::string embed_path = testutil::temp_path("ext_embed") + ".csv";
  write_matrix_csv(proba, proba_path);
  write_matrix_csv(embed, embed_path);

  std::vector<int> labeled{0, 1, 2, 3};
  CmdResult r = run_cli(
      "select --pool " + pool_path +
      " --task classification --vocab-size 20 --num-classes 2"
      " --method bald --budget 2 --labeled " +
      int_list_file(labeled, "bald_lab") + " --proba " + proba_path +
      " --embed " + embed_path + " --out-ids " + testutil::temp_path("x") +
      ".json --out-scores " + testutil::temp_path("x") + ".csv");
  CHECK(r.code == 3);
  CHECK(r.output.find("stochastic") != std::string::npos);
}

TEST_CASE("simulate writes logs, a comparison table, and optional plots") {
  const std::string pool = cls_pool_file(100, 25, 311);
  const std::string out_a = fresh_dir("sim_a");
  const std::string out_b = fresh_dir("sim_b");

  json cfg;
  cfg["pool"] = {{"path", pool},
                 {"task", "classification"},
                 {"vocab_size", 20},
                 {"num_classes", 2}};
  cfg["model"] = {{"kind", "classifier"},
                  {"hidden_width", 8},
                  {"epochs", 2},
                  {"pad_len", 8}};
  cfg["acquisition"] = {{"methods", json::array({"random", "margin"})}};
  cfg["budgets"] = {{"init_size", 15},
                    {"round_fraction", 0.02},
                    {"rounds", 2}};
  cfg["metrics"] = json::array({"accuracy"});
  cfg["seeds"] = json::array({1, 2});
  cfg["output_dir"] = out_a;
  cfg["plot"] = true;

  const std::string cfg_a = testutil::temp_path("sim_cfg_a") + ".json";
  write_text(cfg_a, cfg.dump(2) + "\n");
  CmdResult r = run_cli("simulate --config " + cfg_a);
  CHECK(r.code == 0);

  for (const char* stem : {"random_seed1", "random_seed2", "margin_seed1",
                           "margin_seed2"}) {
    CHECK(fs::exists(out_a + "/" + std::string(stem) + ".csv"));
    CHECK(fs::exists(out_a + "/" + std::string(stem) + ".json"));
    CHECK(fs::exists(out_a + "/" + std::string(stem) + ".meta.json"));
  }
  CHECK(fs::exists(out_a + "/comparison.csv"));
  CHECK(fs::exists(out_a + "/plot_accuracy.svg"));
  const std::string svg = read_text(out_a + "/plot_accuracy.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("margin") != std::string::npos);

  // Same configuration into a second directory: deterministic artifacts.
  cfg["output_dir"] = out_b;
  const std::string cfg_b = testutil::temp_path("sim_cfg_b") + ".json";
  write_text(cfg_b, cfg.dump(2) + "\n");
  CmdResult r2 = run_cli("simulate --config " + cfg_b);
  CHECK(r2.code == 0);
  CHECK(read_text(out_b + "/margin_seed1.csv") ==
        read_text(out_a + "/margin_seed1.csv"));
  CHECK(read_text(out_b + "/margin_seed1.json") ==
        read_text(out_a + "/margin_seed1.json"));
  CHECK(read_text(out_b + "/comparison.csv") ==
        read_text(out_a + "/comparison.csv"));

  const std::string comparison = read_text(out_a + "/comparison.csv");
  CHECK(comparison.rfind("method,metric,checkpoint,round,labeled,mean,"
                         "stddev,n,flag\n",
                         0) == 0);
}

TEST_CASE("simulate rejects configs with unknown keys") {
  const std::string pool = cls_pool_file(40, 10, 313);
  json cfg;
  cfg["pool"] = {{"path", pool}, {"vocab_size", 20}, {"num_classes", 2}};
  cfg["acquisition"] = {{"methods", json::array({"random"})}};
  cfg["metrics"] = json::array({"accuracy"});
  cfg["seeds"] = json::array({1});
  cfg["output_dir"] = fresh_dir("sim_bad");
  cfg["budgets"] = {{"init_size", 5}, {"round_fraction", 0.05}, {"rounds", 1}};
  cfg["typo_key"] = 1;

  const std::string path = testutil::temp_path("sim_cfg_bad") + ".json";
  write_text(path, cfg.dump() + "\n");
  CmdResult r = run_cli("simulate --config " + path);
  CHECK(r.code == 2);
  CHECK(r.output.find("unknown key 'typo_key'") != std::string::npos);

  const std::string broken = testutil::temp_path("sim_cfg_json") + ".json";
  write_text(broken, "{not json\n");
  CHECK(run_cli("simulate --config " + broken).code == 2);
}

TEST_CASE("pairwise vector metrics require a feature matrix") {
  const std::string pool = cls_pool_file(12, 3, 317);
  CmdResult r = run_cli("pairwise --pool " + pool +
                        " --task classification --vocab-size 20"
                        " --num-classes 2 --metric euclidean --out " +
                        testutil::temp_path("pw") + ".alfv --sidecar " +
                        testutil::temp_path("pw") + ".json");
  CHECK(r.code == 2);
  CHECK(r.output.find("needs --features") != std::string::npos);
}

TEST_CASE("pairwise bleu writes a symmetric matrix with a sidecar") {
  const std::string pool = cls_pool_file(15, 0, 319);
  const std::string out = testutil::temp_path("pw_bleu") + ".alfv";
  const std::string sidecar = testutil::temp_path("pw_bleu") + ".json";
  CmdResult r = run_cli("pairwise --pool " + pool +
                        " --task classification --vocab-size 20"
                        " --num-classes 2 --metric bleu --out " + out +
                        " --sidecar " + sidecar);
  CHECK(r.code == 0);

  Matrix m = read_matrix_auto(out);
  REQUIRE(m.rows() == 15);
  REQUIRE(m.cols() == 15);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(m.at(i, i) == 0.0);
    for (std::size_t j = 0; j < i; ++j) CHECK(m.at(i, j) == m.at(j, i));
  }
  const json side = json::parse(read_text(sidecar));
  CHECK(side.at("metric") == "bleu");

  // More workers must not change a single byte.
  const std::string out8 = testutil::temp_path("pw_bleu8") + ".alfv";
  CmdResult r8 = run_cli("pairwise --pool " + pool +
                         " --task classification --vocab-size 20"
                         " --num-classes 2 --metric bleu --workers 8 --out " +
                         out8 + " --sidecar " + testutil::temp_path("pw8") +
                         ".json");
  CHECK(r8.code == 0);
  CHECK(read_text(out8) == read_text(out));
}

TEST_CASE("pairwise subsample reduces the matrix and stays seeded") {
  const std::string pool = cls_pool_file(30, 0, 323);
  const std::string out_a = testutil::temp_path("pw_sub_a") + ".alfv";
  const std::string out_b = testutil::temp_path("pw_sub_b") + ".alfv";
  const std::string side_a = testutil::temp_path("pw_sub_a") + ".json";
  const std::string side_b = testutil::temp_path("pw_sub_b") + ".json";
  const std::string base = "pairwise --pool " + pool +
                           " --task classification --vocab-size 20"
                           " --num-classes 2 --metric bleu --subsample 10"
                           " --seed 77";
  CHECK(run_cli(base + " --out " + out_a + " --sidecar " + side_a).code == 0);
  CHECK(run_cli(base + " --out " + out_b + " --sidecar " + side_b).code == 0);
  Matrix m = read_matrix_auto(out_a);
  CHECK(m.rows() == 10);
  CHECK(read_text(out_a) == read_text(out_b));
  const json side = json::parse(read_text(side_a));
  CHECK(side.at("subsampled") == true);
  CHECK(side.at("ids").size() == 10);
}

TEST_CASE("study writes a report and catches bad metric names") {
  const std::string pool = cls_pool_file(100, 25, 331);
  const std::string out = fresh_dir("study_out");

  json cfg;
  cfg["pool"] = {{"path", pool},
                 {"task", "classification"},
                 {"vocab_size", 20},
                 {"num_classes", 2}};
  cfg["model"] = {{"kind", "classifier"},
                  {"hidden_width", 4},
                  {"epochs", 1},
                  {"pad_len", 8}};
  cfg["study"] = {{"repeats", 10},
                  {"stage", "early"},
                  {"distance_methods", json::array({"euclidean", "bleu"})},
                  {"metric", "accuracy"}};
  cfg["budgets"] = {{"init_size", 10}, {"round_fraction", 0.05}};
  cfg["seed"] = 13;
  cfg["output_dir"] = out;

  const std::string cfg_path = testutil::temp_path("study_cfg") + ".json";
  write_text(cfg_path, cfg.dump(2) + "\n");
  CmdResult r = run_cli("study --config " + cfg_path);
  CHECK(r.code == 0);
  CHECK(fs::exists(out + "/report.json"));
  CHECK(fs::exists(out + "/rho.csv"));
  CHECK(fs::exists(out + "/pairs.csv"));

  const json report = json::parse(read_text(out + "/report.json"));
  CHECK(report.at("repeats") == 10);
  CHECK(report.at("correlations").size() == 2);

  // Unknown distance metric inside the config: config error naming it.
  cfg["study"]["distance_methods"] = json::array({"mahalanobis"});
  const std::string bad = testutil::temp_path("study_cfg_bad") + ".json";
  write_text(bad, cfg.dump() + "\n");
  CmdResult rb = run_cli("study --config " + bad);
  CHECK(rb.code == 2);
  CHECK(rb.output.find("mahalanobis") != std::string::npos);
}
