#include "spectrack/sim/experiments.hpp"

#include <cstdio>

#include "spectrack/error.hpp"
#include "spectrack/sim/trigger.hpp"

namespace spectrack::sim {

namespace {

// Seed stream tags; every random choice in an experiment derives from the
// experiment seed and one of these.
enum SeedTag : std::uint64_t {
  kTaskSeed = 100,
  kReferenceInit,
  kReferenceTrain,
  kUpdateData,
  kUpdateFinetune,
  kExtraData,
  kExtraFinetune,
  kPoison,
};

std::string indexed(std::string_view prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return std::string(prefix) + "-" + buf;
}

// Runs the clean and poisoned updates of one seed. With `extra_clean_step`
// every tested model first receives an additional clean fine-tune, while the
// detector keeps comparing against the original reference.
std::vector<UpdateResult> run_updates(const SimConfig& config, const ExperimentSetup& setup, bool extra_clean_step,
                                      const DumpSink& sink) {
  const SimProvider provider(config.model_shape(), config.train, config.finetune);
  const Detector detector(setup.csdd);
  const auto& task = setup.task;
  const std::size_t update_size = config.effective_update_size();

  std::vector<TriggerSpec> triggers;
  for (const auto& a : config.attacks) triggers.push_back(a.to_trigger(config.task.input_dim));

  const bool probe_test = config.probe == ProbeDataset::CleanTest;
  const std::string probe_name = probe_test ? "D0_test" : "update_clean_subset";
  ActivationDump reference_dump = provider.dump(setup.reference, task.test, setup.layer);
  if (sink) sink("reference", reference_dump);

  std::vector<UpdateResult> results;
  for (std::size_t j = 0; j < config.updates; ++j) {
    TinyModel base = setup.reference;
    if (extra_clean_step) {
      const Dataset extra = sample_subset(task.pool, update_size, derive_seed(setup.seed, kExtraData, j));
      base = provider.finetune(setup.reference, extra, derive_seed(setup.seed, kExtraFinetune, j));
    }
    const Dataset update = sample_subset(task.pool, update_size, derive_seed(setup.seed, kUpdateData, j));
    const std::uint64_t finetune_seed = derive_seed(setup.seed, kUpdateFinetune, j);

    Dataset probe = task.test;
    if (!probe_test) {
      std::vector<std::size_t> first(config.probe_size);
      for (std::size_t i = 0; i < first.size(); ++i) first[i] = i;
      probe = update.subset(first);
      reference_dump = provider.dump(setup.reference, probe, setup.layer);
    }

    auto judge = [&](const TinyModel& model, UpdateResult result) {
      const ActivationDump dump = provider.dump(model, probe, setup.layer);
      if (sink) sink(result.model_id, dump);
      result.verdict = detector.detect(reference_dump, dump, config.alpha, probe_name);
      result.clean_accuracy = model.accuracy(task.test);
      return result;
    };

    UpdateResult clean;
    clean.model_id = indexed("clean", j);
    results.push_back(judge(provider.finetune(base, update, finetune_seed), std::move(clean)));

    for (std::size_t a = 0; a < triggers.size(); ++a) {
      const auto poisoned = poison_dataset(update, triggers[a], derive_seed(setup.seed, kPoison, a * 1000 + j));
      const TinyModel model = provider.finetune(base, poisoned.data, finetune_seed);
      UpdateResult r;
      r.model_id = indexed(triggers[a].name, j);
      r.attack = triggers[a].name;
      r.truth = GroundTruth::Trojaned;
      r.attack_success = attack_success_rate(model, task.test, triggers[a]);
      results.push_back(judge(model, std::move(r)));
    }
  }
  return results;
}

DetectionRun summarize(const SimConfig& config, const ExperimentSetup& setup, std::vector<UpdateResult> updates) {
  DetectionRun run;
  run.reference_accuracy = setup.reference.accuracy(setup.task.test);

  std::vector<LabeledVerdict> clean_verdicts;
  double clean_acc = 0.0;
  for (const auto& u : updates) {
    if (u.truth == GroundTruth::Clean) {
      clean_verdicts.push_back({u.verdict, u.truth});
      clean_acc += u.clean_accuracy;
    }
  }
  run.clean_update_accuracy = clean_acc / static_cast<double>(clean_verdicts.size());

  for (const auto& attack : config.attacks) {
    std::vector<LabeledVerdict> verdicts = clean_verdicts;
    AttackSummary summary{attack.name, 0.0, 0.0};
    std::size_t count = 0;
    for (const auto& u : updates) {
      if (u.attack != attack.name) continue;
      verdicts.push_back({u.verdict, u.truth});
      summary.mean_clean_accuracy += u.clean_accuracy;
      summary.mean_attack_success += u.attack_success;
      ++count;
    }
    summary.mean_clean_accuracy /= static_cast<double>(count);
    summary.mean_attack_success /= static_cast<double>(count);
    run.rows.push_back({attack.name, evaluate_detector(verdicts).counts});
    run.attacks.push_back(summary);
  }
  run.updates = std::move(updates);
  return run;
}

DetectionRun run_detection(const SimConfig& config, bool extra_clean_step, const DumpSink& sink) {
  config.validate();
  const ExperimentSetup setup = prepare_experiment(config, config.seed, sink);
  return summarize(config, setup, run_updates(config, setup, extra_clean_step, sink));
}

}  // namespace

ExperimentSetup prepare_experiment(const SimConfig& config, std::uint64_t seed, const DumpSink& sink) {
  config.validate();
  ExperimentSetup setup;
  setup.seed = seed;
  setup.task = generate_task(config.task, derive_seed(seed, kTaskSeed));

  const SimProvider provider(config.model_shape(), config.train, config.finetune);
  setup.reference = provider.train(provider.init(derive_seed(seed, kReferenceInit)), setup.task.train,
                                   derive_seed(seed, kReferenceTrain));
  setup.layer = setup.reference.probe_layer();

  TrackingOptions options;
  options.n = config.csdd_pairs;
  options.layer = setup.layer;
  options.num_classes = config.task.num_classes;
  options.num_bins = config.bins;
  options.provenance = "synthetic task seed " + std::to_string(seed) + ": D0 " +
                       std::to_string(setup.task.train.size()) + " samples, D0_test " +
                       std::to_string(setup.task.test.size()) + " samples, " +
                       std::to_string(config.task.num_classes) + " classes";
  if (sink) {
    options.on_pair = [&sink](std::size_t row, const ActivationDump& before, const ActivationDump& after) {
      sink(indexed("pair", row + 1) + "_a", before);
      sink(indexed("pair", row + 1) + "_b", after);
    };
  }
  setup.csdd = build_csdd(provider, setup.task.train, setup.task.test, options);
  return setup;
}

SeparabilityRun run_rq1(const SimConfig& config) {
  config.validate();
  SeparabilityRun run;
  for (const auto& attack : config.attacks) run.rows.push_back({attack.name, 0.0, {}});

  for (std::size_t s = 0; s < config.seed_count; ++s) {
    const ExperimentSetup setup = prepare_experiment(config, config.seed + s);
    const auto updates = run_updates(config, setup, false, {});
    std::vector<double> clean_scores;
    for (const auto& u : updates) {
      if (u.truth == GroundTruth::Clean) clean_scores.push_back(u.verdict.mahalanobis_sq);
    }
    for (auto& row : run.rows) {
      std::vector<double> poisoned_scores;
      for (const auto& u : updates) {
        if (u.attack == row.attack) poisoned_scores.push_back(u.verdict.mahalanobis_sq);
      }
      row.per_seed_auc.push_back(stats::roc_auc(poisoned_scores, clean_scores));
    }
  }
  for (auto& row : run.rows) {
    double sum = 0.0;
    for (double a : row.per_seed_auc) sum += a;
    row.mean_auc = sum / static_cast<double>(row.per_seed_auc.size());
  }
  return run;
}

DetectionRun run_rq2(const SimConfig& config, const DumpSink& sink) { return run_detection(config, false, sink); }

DetectionRun run_rq3(const SimConfig& config, const DumpSink& sink) { return run_detection(config, true, sink); }

nlohmann::json report_meta(const SimConfig& config, int rq) {
  return {{"rq", rq},
          {"alpha", config.alpha},
          {"bins", config.bins},
          {"csdd_pairs", config.csdd_pairs},
          {"seed", config.seed},
          {"config", sim_config_to_json(config)}};
}

}  // namespace spectrack::sim
