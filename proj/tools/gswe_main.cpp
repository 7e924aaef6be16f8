// Command-line front end: dataset generation, self-supervised training,
// embedding export, sliced-distance computation, and evaluation, all
// reproducible from (flags, input files, seed).

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gswe/gswe.hpp"

namespace {

using nlohmann::json;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string config_hash(const json& cfg) {
  const std::string s = cfg.dump();
  const std::uint64_t h = gswe::detail::fnv1a64(s.data(), s.size());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

void require_writable(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw std::invalid_argument("refusing to overwrite " + path +
                                " (use --force)");
  }
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::string task = "set-circles";
  std::string out;
  std::uint64_t seed = 0;
  std::size_t n_sets = 400;
  std::size_t n_test = 200;
  double noise = 0.05;
  std::vector<double> radii = {1.0, 1.3};
  std::size_t size_min = 8;
  std::size_t size_max = 21;
  bool force = false;
};

int run_gen(const GenOpts& o) {
  if (o.task != "set-circles") {
    throw std::invalid_argument("unknown task: " + o.task);
  }
  if (o.radii.size() != 2) {
    throw std::invalid_argument("--radii needs exactly two values");
  }
  gswe::SetCirclesParams prm;
  prm.n_train = o.n_sets;
  prm.n_test = o.n_test;
  prm.radius_inner = o.radii[0];
  prm.radius_outer = o.radii[1];
  prm.noise_sigma = o.noise;
  prm.size_min = o.size_min;
  prm.size_max = o.size_max;
  prm.seed = o.seed;
  prm.validate();

  const std::string train_path = o.out + ".train.jsonl";
  const std::string test_path = o.out + ".test.jsonl";
  if (o.n_sets > 0) require_writable(train_path, o.force);
  if (o.n_test > 0) require_writable(test_path, o.force);

  gswe::SetDataset ds = gswe::gen_set_circles(prm);
  json cfg{{"task", o.task},         {"seed", o.seed},
           {"n_sets", o.n_sets},     {"n_test", o.n_test},
           {"noise", o.noise},       {"radii", o.radii},
           {"size_min", o.size_min}, {"size_max", o.size_max}};
  auto emit = [&](gswe::Split split, const std::string& name,
                  const std::string& path) {
    const gswe::SetDataset part = ds.subset(split);
    if (part.sets.empty()) return;
    gswe::save_pointsets(part, path, json{{"config", cfg}, {"split", name}});
    double size_sum = 0.0, ones = 0.0;
    for (const auto& ps : part.sets) {
      size_sum += static_cast<double>(ps.size());
      ones += ps.label.value_or(0);
    }
    const double n = static_cast<double>(part.sets.size());
    std::cout << name << ": " << part.sets.size() << " sets, mean size "
              << fmt_g17(size_sum / n) << ", class balance "
              << fmt_g17(ones / n) << " -> " << path << "\n";
  };
  emit(gswe::Split::train, "train", train_path);
  emit(gswe::Split::test, "test", test_path);
  return 0;
}

// ---------------------------------------------------------------------------
// model construction shared by train / eval-cv

struct ModelOpts {
  std::string slicer = "linear";
  std::size_t L = 1;
  std::size_t K = 1;
  std::size_t M = 2;
  double p = 2.0;
  int degree = 5;
  std::vector<std::size_t> slicer_hidden = {64, 64};
  bool no_backbone = false;
  std::vector<std::size_t> backbone_hidden = {64, 64};
  std::size_t backbone_out = 1;
  std::string bank_init = "gaussian";
};

void add_model_flags(CLI::App* cmd, ModelOpts& m) {
  cmd->add_option("--slicer", m.slicer, "Slicer family: linear|poly|mlp")
      ->capture_default_str();
  cmd->add_option("-L,--slices", m.L, "Number of slices")
      ->capture_default_str();
  cmd->add_option("-K,--references", m.K, "Number of reference sets")
      ->capture_default_str();
  cmd->add_option("-M,--reference-size", m.M, "Points per reference set")
      ->capture_default_str();
  cmd->add_option("--p", m.p, "Transport order p >= 1")->capture_default_str();
  cmd->add_option("--degree", m.degree, "Polynomial slicer degree")
      ->capture_default_str();
  cmd->add_option("--slicer-hidden", m.slicer_hidden,
                  "Hidden widths of the mlp slicer trunk")
      ->capture_default_str();
  cmd->add_flag("--no-backbone", m.no_backbone,
                "Slice raw points instead of backbone features");
  cmd->add_option("--backbone-hidden", m.backbone_hidden,
                  "Hidden widths of the per-element backbone")
      ->capture_default_str();
  cmd->add_option("--backbone-out", m.backbone_out,
                  "Backbone output dimension")
      ->capture_default_str();
  cmd->add_option("--bank-init", m.bank_init,
                  "Reference init: gaussian|data")
      ->capture_default_str();
}

json model_config_json(const ModelOpts& m) {
  return {{"slicer", m.slicer},
          {"L", m.L},
          {"K", m.K},
          {"M", m.M},
          {"p", m.p},
          {"degree", m.degree},
          {"slicer_hidden", m.slicer_hidden},
          {"no_backbone", m.no_backbone},
          {"backbone_hidden", m.backbone_hidden},
          {"backbone_out", m.backbone_out},
          {"bank_init", m.bank_init}};
}

gswe::Model build_model(const ModelOpts& m, const gswe::SetDataset& data,
                        std::uint64_t seed) {
  gswe::Model model;
  model.p = m.p;
  const std::size_t d_data = data.d;
  std::size_t d_slice = d_data;
  if (!m.no_backbone) {
    gswe::Rng brng = gswe::Rng::derive(seed, 10);
    model.backbone =
        gswe::Mlp::init(d_data, m.backbone_hidden, m.backbone_out, brng);
    d_slice = m.backbone_out;
  }
  gswe::SlicerHyper hyper;
  hyper.degree = m.degree;
  hyper.hidden = m.slicer_hidden;
  model.slicer =
      gswe::init_slicer(gswe::slicer_kind_from_string(m.slicer), d_slice, m.L,
                        gswe::Rng::derive(seed, 11).next_u64(), hyper);
  if (m.bank_init == "gaussian") {
    model.bank = gswe::init_bank(m.K, m.M, d_slice,
                                 gswe::Rng::derive(seed, 12).next_u64());
  } else if (m.bank_init == "data") {
    // References live in the compared space; map training points through
    // the freshly initialized backbone before sampling.
    const gswe::SetDataset* src = &data;
    gswe::SetDataset mapped;
    if (model.backbone) {
      mapped.d = d_slice;
      mapped.n_classes = data.n_classes;
      for (const auto& ps : data.sets) {
        gswe::Tape t;
        auto nb = model.backbone->bind(t);
        mapped.sets.emplace_back(t.value(nb.forward(t, t.leaf(ps.points))),
                                 ps.label);
      }
      src = &mapped;
    }
    model.bank = gswe::init_bank(m.K, m.M, d_slice,
                                 gswe::Rng::derive(seed, 12).next_u64(),
                                 gswe::BankInit::data, src);
  } else {
    throw std::invalid_argument("unknown --bank-init: " + m.bank_init);
  }
  return model;
}

gswe::SetDataset load_training_portion(const std::string& path) {
  gswe::SetDataset ds = gswe::load_pointsets(path);
  gswe::SetDataset train = ds.subset(gswe::Split::train);
  // Files without split tags train on everything.
  if (train.sets.empty()) return ds;
  return train;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  std::string out;
  std::string loss_out;  // default: <out>.loss.csv
  std::string loss = "simclr";
  double tau = 0.1;
  int epochs = 50;
  std::size_t batch = 32;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::string aug = "auto";  // rotate2d when d == 2, else jitter
  double jitter_sigma = 1.0;
  bool cosine = false;
  ModelOpts model;
};

int run_train(const TrainOpts& o) {
  gswe::SetDataset data = load_training_portion(o.data);
  gswe::Model model = build_model(o.model, data, o.seed);

  gswe::TrainConfig cfg;
  cfg.loss = o.loss == "simsiam" ? gswe::LossKind::simsiam
                                 : gswe::LossKind::simclr;
  if (o.loss != "simclr" && o.loss != "simsiam") {
    throw std::invalid_argument("unknown --loss: " + o.loss);
  }
  cfg.tau = o.tau;
  cfg.p = o.model.p;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.lr = o.lr;
  cfg.seed = o.seed;
  std::string aug = o.aug;
  if (aug == "auto") aug = data.d == 2 ? "rotate2d" : "jitter";
  if (aug == "rotate2d") {
    cfg.augmentation = gswe::AugmentKind::rotate2d;
  } else if (aug == "jitter") {
    cfg.augmentation = gswe::AugmentKind::jitter;
  } else {
    throw std::invalid_argument("unknown --aug: " + aug);
  }
  cfg.jitter_sigma = o.jitter_sigma;
  cfg.cosine = o.cosine;

  json cfg_json = model_config_json(o.model);
  cfg_json["data"] = o.data;
  cfg_json["loss"] = o.loss;
  cfg_json["tau"] = o.tau;
  cfg_json["epochs"] = o.epochs;
  cfg_json["batch"] = o.batch;
  cfg_json["lr"] = o.lr;
  cfg_json["seed"] = o.seed;
  cfg_json["aug"] = aug;
  cfg_json["jitter_sigma"] = o.jitter_sigma;
  cfg_json["cosine"] = o.cosine;

  const std::string loss_path =
      o.loss_out.empty() ? o.out + ".loss.csv" : o.loss_out;
  gswe::TrainResult result;
  try {
    result = gswe::train(data, model, cfg);
  } catch (const gswe::numerical_error&) {
    std::remove(o.out.c_str());  // no partial checkpoint survives an abort
    std::remove(loss_path.c_str());
    throw;
  }

  gswe::Checkpoint ck;
  ck.model = std::move(model);
  ck.seed = o.seed;
  ck.config = cfg_json;
  gswe::save_checkpoint(ck, o.out);

  std::ofstream csv(loss_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw gswe::data_error("cannot open for writing: " + loss_path);
  csv << "# config=" << cfg_json.dump() << "\n";
  csv << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    csv << e << "," << fmt_g17(result.epoch_loss[e]) << "\n";
  }
  std::cout << "checkpoint -> " << o.out << "\nloss curve -> " << loss_path
            << "\n";
  if (!result.epoch_loss.empty()) {
    std::cout << "first epoch loss " << fmt_g17(result.epoch_loss.front())
              << ", final " << fmt_g17(result.epoch_loss.back()) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// embed

struct EmbedOpts {
  std::string ckpt;
  std::string data;
  std::string out;
  std::string format = "text";
};

int run_embed(const EmbedOpts& o) {
  gswe::Checkpoint ck = gswe::load_checkpoint(o.ckpt);
  gswe::SetDataset ds = gswe::load_pointsets(o.data);
  auto [rows, labels] = gswe::embed_dataset(ck.model, ds);

  std::ofstream out(o.out, std::ios::binary | std::ios::trunc);
  if (!out) throw gswe::data_error("cannot open for writing: " + o.out);
  json header{{"K", ck.model.bank.K},
              {"L", ck.model.slicer.L},
              {"M", ck.model.bank.M},
              {"p", ck.model.p},
              {"seed", ck.seed},
              {"rows", rows.size()},
              {"dim", ck.model.embedding_dim()},
              {"format", o.format}};
  out << header.dump() << "\n";
  if (o.format == "text") {
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out << " ";
        out << fmt_g17(r[i]);
      }
      out << "\n";
    }
  } else if (o.format == "binary") {
    for (const auto& r : rows) {
      for (double v : r) gswe::detail::write_le<double>(out, v);
    }
  } else {
    throw std::invalid_argument("unknown --format: " + o.format);
  }
  if (!out) throw gswe::data_error("write failed: " + o.out);
  std::cout << rows.size() << " embeddings (" << labels.size()
            << " sets) -> " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// distance

struct DistanceOpts {
  std::string ckpt;
  std::string set_a;
  std::string set_b;
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  bool max_gsw = false;
  std::uint64_t seed = 0;
  int max_steps = 200;
  double max_lr = 0.05;
};

int run_distance(const DistanceOpts& o) {
  gswe::Checkpoint ck = gswe::load_checkpoint(o.ckpt);
  gswe::SetDataset da = gswe::load_pointsets(o.set_a);
  gswe::SetDataset db = gswe::load_pointsets(o.set_b);
  if (o.index_a >= da.sets.size() || o.index_b >= db.sets.size()) {
    throw std::invalid_argument("set index out of range");
  }
  const gswe::PointSet& a = da.sets[o.index_a];
  const gswe::PointSet& b = db.sets[o.index_b];
  gswe::GswConfig cfg;
  cfg.p = ck.model.p;
  cfg.L = ck.model.slicer.L;
  cfg.seed = o.seed;
  cfg.max_gsw_steps = o.max_steps;
  cfg.max_gsw_lr = o.max_lr;
  std::cout << fmt_g17(gswe::model_gsw(ck.model, a, b, cfg)) << "\n";
  if (o.max_gsw) {
    auto through = [&](const gswe::PointSet& ps) {
      if (!ck.model.backbone) return ps;
      gswe::Tape t;
      auto nb = ck.model.backbone->bind(t);
      return gswe::PointSet(t.value(nb.forward(t, t.leaf(ps.points))),
                            ps.label);
    };
    gswe::SlicerHyper hyper;
    hyper.degree = ck.model.slicer.degree;
    hyper.hidden = ck.model.slicer.hidden;
    gswe::Slicer probe = gswe::init_slicer(
        ck.model.slicer.kind, ck.model.slicer.d, 1, o.seed, hyper);
    auto [value, best] = gswe::max_gsw(through(a), through(b),
                                       std::move(probe), cfg);
    std::cout << "max_gsw " << fmt_g17(value) << "\n";
    if (best.kind == gswe::SlicerKind::linear) {
      std::cout << "theta";
      for (std::size_t j = 0; j < best.d; ++j) {
        std::cout << " " << fmt_g17(best.theta.at(j, 0));
      }
      std::cout << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval-nn / eval-cv

struct EvalNnOpts {
  std::string ckpt;
  std::string train;
  std::string test;
  std::string out;
};

int run_eval_nn(const EvalNnOpts& o) {
  gswe::Checkpoint ck = gswe::load_checkpoint(o.ckpt);
  gswe::SetDataset train = gswe::load_pointsets(o.train);
  gswe::SetDataset test = gswe::load_pointsets(o.test);
  auto [tr_emb, tr_lab] = gswe::embed_dataset(ck.model, train);
  auto [te_emb, te_lab] = gswe::embed_dataset(ck.model, test);
  const double acc =
      gswe::nn_accuracy(tr_emb, tr_lab, te_emb, te_lab, ck.model.p);
  json cfg{{"ckpt", o.ckpt}, {"train", o.train}, {"test", o.test},
           {"metric", "nn_accuracy"}};
  std::cout << "nn_accuracy " << fmt_g17(acc) << "\n";
  if (!o.out.empty()) {
    std::ofstream csv(o.out, std::ios::binary | std::ios::trunc);
    if (!csv) throw gswe::data_error("cannot open for writing: " + o.out);
    csv << "config_hash,seed,metric,value\n";
    csv << config_hash(cfg) << "," << ck.seed << ",nn_accuracy,"
        << fmt_g17(acc) << "\n";
  }
  return 0;
}

struct EvalCvOpts {
  std::string data;
  int k = 5;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t head_hidden = 128;
  int head_epochs = 50;
  std::size_t head_batch = 64;
  double head_lr = 1e-3;
  ModelOpts model;
};

int run_eval_cv(const EvalCvOpts& o) {
  gswe::SetDataset data = gswe::load_pointsets(o.data);
  gswe::Model model = build_model(o.model, data, o.seed);
  gswe::HeadConfig cfg;
  cfg.hidden = o.head_hidden;
  cfg.epochs = o.head_epochs;
  cfg.batch_size = o.head_batch;
  cfg.lr = o.head_lr;
  cfg.seed = o.seed;
  gswe::KfoldResult r = gswe::kfold_classify(data, model, o.k, cfg);
  std::cout << "cv_accuracy " << fmt_g17(r.mean_accuracy) << " +- "
            << fmt_g17(r.std_accuracy) << "\n";
  json cfg_json = model_config_json(o.model);
  cfg_json["data"] = o.data;
  cfg_json["k"] = o.k;
  cfg_json["seed"] = o.seed;
  cfg_json["head_hidden"] = o.head_hidden;
  cfg_json["head_epochs"] = o.head_epochs;
  cfg_json["head_batch"] = o.head_batch;
  cfg_json["head_lr"] = o.head_lr;
  if (!o.out.empty()) {
    std::ofstream csv(o.out, std::ios::binary | std::ios::trunc);
    if (!csv) throw gswe::data_error("cannot open for writing: " + o.out);
    csv << "config_hash,seed,metric,value\n";
    const std::string h = config_hash(cfg_json);
    csv << h << "," << o.seed << ",cv_accuracy_mean,"
        << fmt_g17(r.mean_accuracy) << "\n";
    csv << h << "," << o.seed << ",cv_accuracy_std,"
        << fmt_g17(r.std_accuracy) << "\n";
    for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f) {
      csv << h << "," << o.seed << ",cv_accuracy_fold" << f << ","
          << fmt_g17(r.fold_accuracy[f]) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gswe: sliced-transport set embeddings"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; flags take precedence");
  app.fallthrough();  // lets --config appear after the subcommand too

  GenOpts gen;
  auto* cg = app.add_subcommand("gen", "Generate a synthetic dataset");
  cg->add_option("--task", gen.task, "Dataset family")->capture_default_str();
  cg->add_option("--out", gen.out, "Output path prefix")->required();
  cg->add_option("--seed", gen.seed, "PRNG seed")->capture_default_str();
  cg->add_option("--n-sets", gen.n_sets, "Training sets")
      ->capture_default_str();
  cg->add_option("--n-test", gen.n_test, "Test sets")->capture_default_str();
  cg->add_option("--noise", gen.noise, "Gaussian noise sigma")
      ->capture_default_str();
  cg->add_option("--radii", gen.radii, "Class radii (two values)")
      ->expected(2);
  cg->add_option("--size-min", gen.size_min, "Minimum set cardinality")
      ->capture_default_str();
  cg->add_option("--size-max", gen.size_max, "Maximum set cardinality")
      ->capture_default_str();
  cg->add_flag("--force", gen.force, "Overwrite existing files");

  TrainOpts tr;
  auto* ct = app.add_subcommand("train", "Self-supervised training");
  ct->add_option("--data", tr.data, "Training dataset (jsonl)")->required();
  ct->add_option("--out", tr.out, "Checkpoint output path")->required();
  ct->add_option("--loss-out", tr.loss_out, "Loss curve CSV path");
  ct->add_option("--loss", tr.loss, "Loss: simclr|simsiam")
      ->capture_default_str();
  ct->add_option("--tau", tr.tau, "SimCLR temperature")->capture_default_str();
  ct->add_option("--epochs", tr.epochs, "Training epochs")
      ->capture_default_str();
  ct->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  ct->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  ct->add_option("--seed", tr.seed, "PRNG seed")->capture_default_str();
  ct->add_option("--aug", tr.aug, "Augmentation: auto|rotate2d|jitter")
      ->capture_default_str();
  ct->add_option("--jitter-sigma", tr.jitter_sigma, "Jitter noise sigma")
      ->capture_default_str();
  ct->add_flag("--cosine", tr.cosine,
               "Cosine-normalize embeddings in the similarity");
  add_model_flags(ct, tr.model);

  EmbedOpts em;
  auto* ce = app.add_subcommand("embed", "Embed a dataset with a checkpoint");
  ce->add_option("--ckpt", em.ckpt, "Checkpoint path")->required();
  ce->add_option("--data", em.data, "Dataset path")->required();
  ce->add_option("--out", em.out, "Output matrix path")->required();
  ce->add_option("--format", em.format, "text|binary")->capture_default_str();

  DistanceOpts di;
  auto* cd = app.add_subcommand("distance",
                                "Sliced distance between two stored sets");
  cd->add_option("--ckpt", di.ckpt, "Checkpoint path")->required();
  cd->add_option("--set-a", di.set_a, "Dataset holding the first set")
      ->required();
  cd->add_option("--set-b", di.set_b, "Dataset holding the second set")
      ->required();
  cd->add_option("--index-a", di.index_a, "Record index in --set-a")
      ->capture_default_str();
  cd->add_option("--index-b", di.index_b, "Record index in --set-b")
      ->capture_default_str();
  cd->add_flag("--max-gsw", di.max_gsw,
               "Also run single-slice ascent and report the best slice");
  cd->add_option("--seed", di.seed, "Seed for the ascent start")
      ->capture_default_str();
  cd->add_option("--max-steps", di.max_steps, "Ascent iterations")
      ->capture_default_str();
  cd->add_option("--max-lr", di.max_lr, "Ascent step size")
      ->capture_default_str();

  EvalNnOpts en;
  auto* cn = app.add_subcommand("eval-nn",
                                "1-NN retrieval accuracy of frozen embeddings");
  cn->add_option("--ckpt", en.ckpt, "Checkpoint path")->required();
  cn->add_option("--train", en.train, "Training dataset")->required();
  cn->add_option("--test", en.test, "Test dataset")->required();
  cn->add_option("--out", en.out, "Optional CSV output");

  EvalCvOpts ev;
  auto* cv = app.add_subcommand("eval-cv",
                                "Stratified k-fold supervised evaluation");
  cv->add_option("--data", ev.data, "Labelled dataset")->required();
  cv->add_option("--k", ev.k, "Fold count")->capture_default_str();
  cv->add_option("--seed", ev.seed, "PRNG seed")->capture_default_str();
  cv->add_option("--out", ev.out, "Optional CSV output");
  cv->add_option("--head-hidden", ev.head_hidden, "Classifier hidden width")
      ->capture_default_str();
  cv->add_option("--head-epochs", ev.head_epochs, "Classifier epochs")
      ->capture_default_str();
  cv->add_option("--head-batch", ev.head_batch, "Classifier batch size")
      ->capture_default_str();
  cv->add_option("--head-lr", ev.head_lr, "Classifier learning rate")
      ->capture_default_str();
  add_model_flags(cv, ev.model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cg->parsed()) return run_gen(gen);
    if (ct->parsed()) return run_train(tr);
    if (ce->parsed()) return run_embed(em);
    if (cd->parsed()) return run_distance(di);
    if (cn->parsed()) return run_eval_nn(en);
    if (cv->parsed()) return run_eval_cv(ev);
  } catch (const gswe::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const gswe::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
