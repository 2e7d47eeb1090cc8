#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tall/checkpoint.hpp"
#include "tall/config.hpp"
#include "tall/corpus.hpp"
#include "tall/errors.hpp"
#include "tall/metrics.hpp"
#include "tall/mixture.hpp"
#include "tall/parallel.hpp"
#include "tall/rng.hpp"
#include "tall/sync.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace tall;

namespace {

py::dict record_to_dict(const EpochRecord& r) {
  return py::dict("epoch"_a = r.epoch, "train_loss"_a = r.train_loss,
                  "val_ndcg"_a = r.val_ndcg, "group_ndcg"_a = r.group_ndcg,
                  "group_weight"_a = r.group_weight,
                  "users_trained"_a = r.users_trained);
}

py::dict report_to_dict(const BiasReport& r) {
  py::dict d("name"_a = r.name, "k"_a = r.k, "overall"_a = r.overall,
             "group"_a = r.group, "counts"_a = r.counts,
             "evaluated_users"_a = r.evaluated_users,
             "skipped_users"_a = r.skipped_users);
  if (r.delta_pct) d["delta_pct"] = *r.delta_pct;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "loss-driven mixture-of-experts recommender core";
#ifdef TALL_VERSION
  m.attr("__version__") = TALL_VERSION;
#endif

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("derive_seed", &derive_seed, "base"_a, "tag"_a, "a"_a = 0, "b"_a = 0,
        "Named deterministic sub-stream seed derivation.");
  m.def("set_max_threads", &set_max_threads, "n"_a,
        "Cap worker threads (0 = hardware concurrency).");

  // data pipeline
  py::class_<InteractionSet>(m, "InteractionSet")
      .def_readonly("n_users", &InteractionSet::n_users)
      .def_readonly("n_items", &InteractionSet::n_items)
      .def_readonly("pairs", &InteractionSet::pairs)
      .def_readonly("user_ids", &InteractionSet::user_ids)
      .def_readonly("item_ids", &InteractionSet::item_ids);

  m.def("load_interactions", &load_interactions, "path"_a,
        "rating_threshold"_a = std::nullopt);
  m.def("apply_min_interactions", &apply_min_interactions, "data"_a, "min_count"_a);
  m.def(
      "interactions_from_pairs",
      [](const std::vector<std::pair<int, int>>& pairs) {
        InteractionSet out;
        for (auto [u, i] : pairs) {
          if (u < 0 || i < 0) throw DataError("negative index in pairs");
          out.n_users = std::max(out.n_users, u + 1);
          out.n_items = std::max(out.n_items, i + 1);
        }
        out.pairs = pairs;
        std::sort(out.pairs.begin(), out.pairs.end());
        out.pairs.erase(std::unique(out.pairs.begin(), out.pairs.end()),
                        out.pairs.end());
        for (int u = 0; u < out.n_users; ++u) out.user_ids.push_back(std::to_string(u));
        for (int i = 0; i < out.n_items; ++i) out.item_ids.push_back(std::to_string(i));
        return out;
      },
      "pairs"_a, "Build an interaction set from dense (user, item) index pairs.");

  py::class_<SplitDataset>(m, "SplitDataset")
      .def_readonly("n_users", &SplitDataset::n_users)
      .def_readonly("n_items", &SplitDataset::n_items)
      .def_readonly("train_items", &SplitDataset::train_items)
      .def_readonly("val_items", &SplitDataset::val_items)
      .def_readonly("test_items", &SplitDataset::test_items)
      .def_readonly("split_seed", &SplitDataset::split_seed)
      .def("train_vector", &SplitDataset::train_vector, "u"_a)
      .def("normalized_train_vector", &SplitDataset::normalized_train_vector, "u"_a);

  m.def("split", &split, "data"_a, "ratios"_a, "seed"_a);

  m.def("jaccard", &jaccard, "a"_a, "b"_a);

  py::class_<MainstreamProfile>(m, "MainstreamProfile")
      .def_readonly("scores", &MainstreamProfile::scores)
      .def_readonly("order", &MainstreamProfile::order)
      .def("group_sizes", &MainstreamProfile::group_sizes)
      .def_property_readonly("subgroup", [](const MainstreamProfile& p) {
        std::vector<int> out;
        out.reserve(p.subgroup.size());
        for (Subgroup g : p.subgroup) out.push_back(static_cast<int>(g));
        return out;
      });

  m.def("mainstream_scores", &mainstream_scores, "split"_a);

  // adaptive weights
  m.def(
      "solve_weights",
      [](const std::vector<double>& signal, double alpha) {
        const WeightSolution s = solve_weights(signal, alpha);
        return py::make_tuple(s.weights, s.lambda, s.clipped);
      },
      "signal"_a, "alpha"_a, "Returns (weights, lambda, clipped_count).");

  // gates + metrics
  m.def("gate_from_losses", &gate_from_losses, "losses"_a, "eps"_a = 1e-3);
  m.def("rank_items", &rank_items, "scores"_a, "exclude"_a, "k"_a);
  m.def("ndcg_at_k", &ndcg_at_k, "ranked"_a, "relevant"_a, "k"_a);
  m.def("recall_at_k", &recall_at_k, "ranked"_a, "relevant"_a, "k"_a);

  // training
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("n_experts", &TrainConfig::n_experts)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("latent", &TrainConfig::latent)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("beta_max", &TrainConfig::beta_max)
      .def_readwrite("beta_anneal_frac", &TrainConfig::beta_anneal_frac)
      .def_readwrite("dropout", &TrainConfig::dropout)
      .def_readwrite("gate_eps", &TrainConfig::gate_eps)
      .def_readwrite("adaptive_weights", &TrainConfig::adaptive_weights)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("gap_epochs", &TrainConfig::gap_epochs)
      .def_readwrite("window", &TrainConfig::window)
      .def_readwrite("eval_k", &TrainConfig::eval_k)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property(
          "weight_mode",
          [](const TrainConfig& c) {
            return c.weight_mode == WeightMode::kRawLoss ? "raw_loss" : "loss_change";
          },
          [](TrainConfig& c, const std::string& mode) {
            if (mode == "raw_loss") c.weight_mode = WeightMode::kRawLoss;
            else if (mode == "loss_change") c.weight_mode = WeightMode::kLossChange;
            else throw ConfigError("weight_mode must be raw_loss or loss_change");
          });

  py::class_<EnsembleModel>(m, "EnsembleModel")
      .def_property_readonly("n_experts", &EnsembleModel::n_experts)
      .def("predict",
           [](const EnsembleModel& model, int u, const std::vector<double>& x) {
             return ensemble_predict(model, u, x);
           },
           "u"_a, "x"_a);

  m.def(
      "train",
      [](const TrainConfig& config, const SplitDataset& sd,
         const MainstreamProfile& profile) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(config, sd, profile);
        }
        py::list history;
        for (const EpochRecord& rec : r.history) history.append(record_to_dict(rec));
        py::dict info("best_epoch"_a = r.best_epoch,
                      "best_val_ndcg"_a = r.best_val_ndcg, "history"_a = history,
                      "weight_history"_a = r.weight_history);
        return py::make_tuple(r.best, info);
      },
      "config"_a, "split"_a, "profile"_a,
      "Returns (best_model, info dict with history and weight_history).");

  m.def(
      "evaluate_model",
      [](const EnsembleModel& model, const SplitDataset& sd,
         const MainstreamProfile& profile, int k) {
        BiasReport rep;
        {
          py::gil_scoped_release release;
          auto scorer = [&](int u) {
            return ensemble_predict(model, u, sd.normalized_train_vector(u));
          };
          rep = bias_report(scorer, sd, profile, k, nullptr);
        }
        return report_to_dict(rep);
      },
      "model"_a, "split"_a, "profile"_a, "k"_a = 20,
      "Subgroup NDCG report for a trained model on the test fold.");

  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& dir, const EnsembleModel& model, int epoch,
         double val_ndcg, const std::string& config_hash) {
        save_checkpoint(dir, model, epoch, val_ndcg, config_hash);
      },
      "dir"_a, "model"_a, "epoch"_a = 0, "val_ndcg"_a = 0.0, "config_hash"_a = "");
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& dir) {
        LoadedCheckpoint lc = load_checkpoint(dir);
        py::dict meta("n_experts"_a = lc.meta.n_experts, "n_items"_a = lc.meta.n_items,
                      "hidden"_a = lc.meta.hidden, "latent"_a = lc.meta.latent,
                      "n_users"_a = lc.meta.n_users, "epoch"_a = lc.meta.epoch,
                      "val_ndcg"_a = lc.meta.val_ndcg,
                      "config_hash"_a = lc.meta.config_hash);
        return py::make_tuple(lc.model, meta);
      },
      "dir"_a, "Returns (model, meta dict).");
}
