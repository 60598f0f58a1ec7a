// pbpa: train and probe the pairwise body-part attention pipeline on
// synthetic scenes. Exit codes: 0 ok, 1 check failure, 2 config error,
// 3 I/O error, 4 dataset/config digest mismatch, 5 numeric failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pbpa/gradcheck.hpp"
#include "pbpa/model.hpp"
#include "pbpa/rng.hpp"
#include "pbpa/runconfig.hpp"
#include "pbpa/synthdata.hpp"

namespace {

using namespace pbpa;

constexpr int kExitOk = 0;
constexpr int kExitCheckFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDigest = 4;
constexpr int kExitNumeric = 5;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void echo_config(const RunConfig& cfg) {
  for (const auto& [k, v] : cfg.entries()) std::printf("config %s %s\n", k.c_str(), v.c_str());
}

RunConfig load_config_or_exit(const std::string& path) {
  try {
    return RunConfig::from_file(path);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::exit(kExitIo);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::exit(kExitConfig);
  }
}

// batch indices are a pure function of (seed, step) so a resumed run draws
// the same scenes as an uninterrupted one
std::vector<int> batch_indices(std::uint64_t seed, int step, int batch, int n) {
  Rng rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(step + 1)));
  std::vector<int> out;
  out.reserve(static_cast<size_t>(batch));
  while (static_cast<int>(out.size()) < batch) {
    const int idx = rng.uniform_int(0, n - 1);
    if (batch <= n && std::find(out.begin(), out.end(), idx) != out.end()) continue;
    out.push_back(idx);
  }
  return out;
}

int cmd_gen(const std::string& config_path, const std::string& out_path, int n, std::uint64_t seed) {
  RunConfig cfg = load_config_or_exit(config_path);
  try {
    cfg.gen.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  echo_config(cfg);
  const std::string path = out_path.empty() ? cfg.train_data : out_path;
  const double t0 = now_seconds();
  try {
    const Dataset ds = generate_dataset(seed, n, cfg.gen, path);
    std::vector<int> counts(static_cast<size_t>(cfg.gen.classes), 0);
    for (const Scene& s : ds.scenes)
      for (int c = 0; c < cfg.gen.classes; ++c) counts[static_cast<size_t>(c)] += s.labels[static_cast<size_t>(c)];
    for (int c = 0; c < cfg.gen.classes; ++c)
      std::printf("class_positives %d %s %d\n", c, class_table()[static_cast<size_t>(c)].name,
                  counts[static_cast<size_t>(c)]);
    std::printf("generated %zu %s\n", ds.scenes.size(), path.c_str());
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  std::printf("time gen %.3f\n", now_seconds() - t0);
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& resume, int stop_after) {
  RunConfig cfg = load_config_or_exit(config_path);
  echo_config(cfg);
  try {
    cfg.model.validate();
    cfg.gen.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }

  Dataset train;
  try {
    train = read_dataset(cfg.train_data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  if (train.digest != cfg.gen.digest()) {
    std::fprintf(stderr, "error: dataset %s digest %016llx does not match config digest %016llx\n",
                 cfg.train_data.c_str(), static_cast<unsigned long long>(train.digest),
                 static_cast<unsigned long long>(cfg.gen.digest()));
    return kExitDigest;
  }
  if (static_cast<int>(train.classes) != cfg.model.classes) {
    std::fprintf(stderr, "error: dataset has %u classes, config expects %d\n", train.classes, cfg.model.classes);
    return kExitDigest;
  }

  Model model(cfg.model, cfg.model.seed);
  int start_step = 0;
  if (!resume.empty()) {
    try {
      const auto info = model.load(resume);
      if (info.gen_digest != cfg.gen.digest()) {
        std::fprintf(stderr, "error: checkpoint digest mismatch\n");
        return kExitDigest;
      }
      start_step = info.step;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitIo;
    }
  }

  const int n = static_cast<int>(train.scenes.size());
  const int end_step = stop_after > 0 ? std::min(cfg.model.steps, stop_after) : cfg.model.steps;
  const double t0 = now_seconds();
  try {
    for (int step = start_step; step < end_step; ++step) {
      const auto idx = batch_indices(cfg.model.seed, step, cfg.model.batch, n);
      std::vector<Model::BatchItem> batch;
      batch.reserve(idx.size());
      for (int i : idx) batch.push_back({&train.scenes[static_cast<size_t>(i)], i});
      const double loss = model.train_step(batch, step);
      const double lr = step < static_cast<int>(std::floor(cfg.model.decay_frac * cfg.model.steps))
                            ? cfg.model.lr
                            : cfg.model.lr * cfg.model.lr_decay;
      if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == end_step))
        std::printf("step %d loss %.6f lr %.6g\n", step, loss, lr);
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  try {
    model.save(cfg.checkpoint, cfg.gen.digest(), end_step);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  std::printf("checkpoint %s step %d\n", cfg.checkpoint.c_str(), end_step);
  std::printf("time train %.3f\n", now_seconds() - t0);
  return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint) {
  RunConfig cfg = load_config_or_exit(config_path);
  echo_config(cfg);
  const std::string ckpt = checkpoint.empty() ? cfg.checkpoint : checkpoint;
  if (!std::filesystem::exists(ckpt)) {
    std::fprintf(stderr, "error: checkpoint not found: %s\n", ckpt.c_str());
    return kExitIo;
  }
  Dataset test;
  try {
    test = read_dataset(cfg.test_data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }

  Model model(cfg.model, cfg.model.seed);
  Model::LoadInfo info;
  try {
    info = model.load(ckpt);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  if (info.gen_digest != test.digest) {
    std::fprintf(stderr, "error: checkpoint digest does not match dataset %s\n", cfg.test_data.c_str());
    return kExitDigest;
  }

  const double t0 = now_seconds();
  try {
    const EvalResult res = evaluate_model(model, test.scenes, cfg.eval_jobs);
    for (int c = 0; c < cfg.model.classes; ++c)
      if (res.positives[static_cast<size_t>(c)] > 0)
        std::printf("class_ap %d %.6f\n", c, res.per_class_ap[static_cast<size_t>(c)]);
    std::printf("map %.6f\n", res.map);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  std::printf("time eval %.3f\n", now_seconds() - t0);
  return kExitOk;
}

int cmd_gradcheck(const std::string& scale, const std::string& corrupt) {
  if (scale != "mini") {
    std::fprintf(stderr, "error: unsupported --scale '%s' (only 'mini')\n", scale.c_str());
    return kExitConfig;
  }
  const double t0 = now_seconds();
  const auto entries = run_gradcheck_suite(corrupt);
  bool ok = true;
  for (const auto& e : entries) {
    std::printf("gradcheck %s %.3e\n", e.op.c_str(), e.err);
    if (!e.pass) {
      std::printf("gradcheck_fail %s %.3e tol %.0e\n", e.op.c_str(), e.err, e.tol);
      ok = false;
    }
  }
  std::printf("time gradcheck %.3f\n", now_seconds() - t0);
  return ok ? kExitOk : kExitCheckFail;
}

int cmd_inspect(const std::string& config_path, const std::string& checkpoint, int top) {
  RunConfig cfg = load_config_or_exit(config_path);
  echo_config(cfg);
  const std::string ckpt = checkpoint.empty() ? cfg.checkpoint : checkpoint;
  if (!std::filesystem::exists(ckpt)) {
    std::fprintf(stderr, "error: checkpoint not found: %s\n", ckpt.c_str());
    return kExitIo;
  }
  Dataset test;
  try {
    test = read_dataset(cfg.test_data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  Model model(cfg.model, cfg.model.seed);
  Model::LoadInfo info;
  try {
    info = model.load(ckpt);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  if (info.gen_digest != test.digest) {
    std::fprintf(stderr, "error: checkpoint digest does not match dataset %s\n", cfg.test_data.c_str());
    return kExitDigest;
  }

  const double t0 = now_seconds();
  const InspectResult res = inspect_attention(model, test.scenes, test.class_pairs, cfg.eval_jobs);
  for (int c = 0; c < cfg.model.classes; ++c) {
    const char* cname = class_table()[static_cast<size_t>(c)].name;
    if (res.positives[static_cast<size_t>(c)] == 0) {
      std::printf("no_positives %d %s\n", c, cname);
      continue;
    }
    const auto& counts = res.pair_counts[static_cast<size_t>(c)];
    std::vector<int> order(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&counts](int a, int b) {
      if (counts[static_cast<size_t>(a)] != counts[static_cast<size_t>(b)])
        return counts[static_cast<size_t>(a)] > counts[static_cast<size_t>(b)];
      return a < b;
    });
    std::printf("top_pairs %d %s", c, cname);
    for (int r = 0; r < top && r < static_cast<int>(order.size()); ++r) {
      const int pair = order[static_cast<size_t>(r)];
      if (pair < kNumPairs)
        std::printf(" %s", pair_name(pair).c_str());
      else
        std::printf(" part:%s", part_names()[static_cast<size_t>(pair - kNumPairs)].c_str());
    }
    std::printf("\n");
  }
  std::printf("attn_top1 %.6f\n", res.top1);
  std::printf("attn_top5 %.6f\n", res.top5);
  std::printf("time inspect %.3f\n", now_seconds() - t0);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairwise body-part attention pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_path, checkpoint, resume, scale = "mini", corrupt;
  int n = 100, top = 5, stop_after = 0;
  std::uint64_t seed = 1;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_path, "output path (default: train_data from config)");
  gen->add_option("--n", n, "number of scenes");
  gen->add_option("--seed", seed, "first scene seed");

  auto* train = app.add_subcommand("train", "train a model on a generated dataset");
  train->add_option("--config", config_path)->required();
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--stop-after", stop_after, "stop (and checkpoint) after this step, 0 = run to completion");

  auto* eval = app.add_subcommand("eval", "evaluate mAP on the test dataset");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint path (default from config)");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference checks for every op");
  gc->add_option("--scale", scale, "suite scale (mini)");
  gc->add_option("--corrupt", corrupt, "fault-injection fixture: break this op's backward")
      ->group("");  // hidden

  auto* inspect = app.add_subcommand("inspect", "per-class most-selected pairs and planted-pair hit rates");
  inspect->add_option("--config", config_path)->required();
  inspect->add_option("--checkpoint", checkpoint, "checkpoint path (default from config)");
  inspect->add_option("--top", top, "pairs to list per class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  if (gen->parsed()) return cmd_gen(config_path, out_path, n, seed);
  if (train->parsed()) return cmd_train(config_path, resume, stop_after);
  if (eval->parsed()) return cmd_eval(config_path, checkpoint);
  if (gc->parsed()) return cmd_gradcheck(scale, corrupt);
  if (inspect->parsed()) return cmd_inspect(config_path, checkpoint, top);
  return kExitConfig;
}
