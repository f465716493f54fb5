// revsent command-line tool: ingest, label, split, baseline, finetune, grid,
// eval and report over app-review datasets.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>

#include "cli_support.hpp"

namespace revsent::cli {
namespace {

using Meta = std::vector<std::pair<std::string, std::string>>;

struct Run {
  const Settings& settings;
  Artifacts artifacts;
};

// ---------------------------------------------------------------------------
// Shared loading helpers

struct TextDataset {
  std::vector<std::string> texts;  // lowercased content
  std::vector<int> labels;
};

TextDataset load_dataset(const std::string& path, bool strict) {
  const auto loaded = load_labeled_reviews(path, {false, strict});
  for (const auto& r : loaded.rejected)
    std::cerr << "warning: " << path << ": row " << r.row << " skipped: " << r.reason << "\n";
  if (loaded.records.empty()) throw DataError(path + ": no usable rows");
  TextDataset d;
  for (const auto& r : loaded.records) {
    d.texts.push_back(text::to_lower(r.review.content));
    d.labels.push_back(class_id(r.label));
  }
  return d;
}

std::vector<baselines::Document> tokenize_all(const std::vector<std::string>& texts) {
  std::vector<baselines::Document> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back(text::split_whitespace(t));
  return docs;
}

ReportFormat report_format(const Settings& s, ReportFormat fallback) {
  const auto f = s.str("format", fallback == ReportFormat::csv ? "csv" : "markdown");
  if (f == "csv") return ReportFormat::csv;
  if (f == "markdown" || f == "md") return ReportFormat::markdown;
  throw ConfigError("format", "expected csv or markdown, got '" + f + "'");
}

std::string labeling_name(const Settings& s) {
  const auto l = s.str("labeling", "score");
  if (l != "score" && l != "lexicon") throw ConfigError("labeling", "expected score or lexicon, got '" + l + "'");
  return l;
}

std::string distribution_text(const ClassCounts& c) {
  return "negative=" + std::to_string(c[0]) + " neutral=" + std::to_string(c[1]) + " positive=" + std::to_string(c[2]);
}

EncoderConfig encoder_config(const Settings& s, int vocab_size, int max_len) {
  EncoderConfig c;
  c.layers = s.positive_int("encoder.L", c.layers);
  c.hidden = s.positive_int("encoder.H", c.hidden);
  c.heads = s.positive_int("encoder.A", c.heads);
  c.ffn = static_cast<int>(s.integer("encoder.ffn", 0));
  c.dropout = s.real("encoder.dropout", 0.0);
  c.vocab_size = vocab_size;
  c.max_positions = max_len;
  c.validate();
  return c;
}

TrainConfig train_config(const Settings& s) {
  TrainConfig t;
  t.learning_rate = s.real("learning_rate", t.learning_rate);
  t.batch_size = static_cast<int>(s.integer("batch_size", t.batch_size));
  t.epochs = static_cast<int>(s.integer("epochs", t.epochs));
  t.epoch_decay = s.real("decay", t.epoch_decay);
  t.grad_clip = s.real("grad_clip", t.grad_clip);
  t.max_len = static_cast<int>(s.integer("max_len", t.max_len));
  t.seed = s.seed();
  t.validate();
  return t;
}

/// Vocabulary from --vocab, or built from the training texts and written out.
Vocab obtain_vocab(const Run& run, const std::vector<std::string>& train_texts, Meta& meta) {
  if (auto path = run.settings.str("vocab")) {
    // encoder.vocab only caps a vocabulary built here; a given file is used as is.
    auto v = load_vocab(*path);
    meta.emplace_back("vocab", *path);
    return v;
  }
  const auto max_words = static_cast<std::size_t>(run.settings.positive_int("encoder.vocab", 8000));
  auto v = build_vocab(train_texts, max_words);
  std::string body;
  for (std::size_t i = 0; i < v.size(); ++i) body += v.token(static_cast<int>(i)) + "\n";
  const auto path = run.artifacts.write("vocab.txt", body, {{"source", "built from training texts"}});
  meta.emplace_back("vocab", path.string());
  return v;
}

EncodedDataset encode_dataset(const TextDataset& d, const Vocab& vocab, int max_len) {
  EncodedDataset out;
  out.inputs.reserve(d.texts.size());
  for (const auto& t : d.texts) out.inputs.push_back(encode(t, vocab, max_len));
  out.labels = d.labels;
  return out;
}

EncoderParams<float> starting_params(const Settings& s, const EncoderConfig& c) {
  if (auto init = s.str("init")) return load_pretrained<float>(*init, c, s.seed());
  return init_params<float>(c, s.seed());
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest(const Run& run) {
  const auto& s = run.settings;
  const auto in = s.str("in") ? s.required("in") : s.required("reviews");
  auto loaded = load_reviews(in, {s.flag("dedup", false), s.flag("strict", false)});

  std::vector<std::string> keywords;
  for (const auto& path : s.list("stopwords")) {
    const auto words = load_keywords(path);
    keywords.insert(keywords.end(), words.begin(), words.end());
  }
  const KeywordFilter filter(keywords);

  std::vector<ReviewRecord> kept;
  std::size_t emptied = 0;
  for (auto& r : loaded.records) {
    r.content = preprocess(r.content, filter);
    if (r.content.empty()) {
      ++emptied;
      continue;
    }
    kept.push_back(std::move(r));
  }

  std::vector<csv::Row> rejected;
  for (const auto& r : loaded.rejected) rejected.push_back({std::to_string(r.row), r.reason});
  const auto out = s.str("out", "reviews_clean.csv");
  const Meta meta = {{"input", in},
                     {"rows", std::to_string(loaded.rows)},
                     {"rejected", std::to_string(loaded.rejected.size())},
                     {"duplicates_dropped", std::to_string(loaded.duplicates)},
                     {"emptied_by_cleaning", std::to_string(emptied)},
                     {"keywords", std::to_string(keywords.size())}};
  const auto path = run.artifacts.write(out, reviews_to_csv(kept), meta);
  run.artifacts.write(out + ".rejected.csv", csv::write({"row", "reason"}, rejected));
  std::cout << "ingest: " << loaded.rows << " rows, " << kept.size() << " kept, " << loaded.rejected.size()
            << " rejected, " << loaded.duplicates << " duplicates, " << emptied << " empty after cleaning -> "
            << path.string() << "\n";
  return 0;
}

int cmd_label(const Run& run) {
  const auto& s = run.settings;
  const auto in = s.required("in");
  const auto method = s.str("method", "score");
  if (method != "score" && method != "lexicon")
    throw ConfigError("method", "expected score or lexicon, got '" + method + "'");
  const auto loaded = load_reviews(in, {s.flag("dedup", false), s.flag("strict", false)});
  for (const auto& r : loaded.rejected)
    std::cerr << "warning: " << in << ": row " << r.row << " skipped: " << r.reason << "\n";

  std::optional<Lexicon> lexicon;
  Meta meta = {{"input", in}, {"method", method}};
  if (method == "lexicon") {
    const auto paths = s.list("lexicon");
    if (paths.empty()) throw ConfigError("lexicon", "lexicon labeling needs at least one lexicon file");
    lexicon = load_lexicon(paths);
    meta.emplace_back("lexicon_positive", std::to_string(lexicon->positive_count()));
    meta.emplace_back("lexicon_negative", std::to_string(lexicon->negative_count()));
  }

  std::vector<LabeledReview> labeled;
  std::vector<Sentiment> labels;
  for (const auto& r : loaded.records) {
    const auto label = lexicon ? label_by_lexicon(text::to_lower(r.content), *lexicon) : label_by_score(r.score);
    labeled.push_back({r, label});
    labels.push_back(label);
  }
  const auto dist = distribution_text(class_distribution(labels));
  meta.emplace_back("distribution", dist);
  const auto path = run.artifacts.write(s.str("out", "labeled.csv"), labeled_to_csv(labeled), meta);
  std::cout << "label (" << method << "): " << labeled.size() << " rows, " << dist << " -> " << path.string() << "\n";
  return 0;
}

int cmd_split(const Run& run) {
  const auto& s = run.settings;
  const auto in = s.required("in");
  const auto ratios_list =
      KeyValueConfig::parse_list<double>("split.ratios", s.str("split.ratios", "0.9,0.05,0.05"), KeyValueConfig::parse_double);
  if (ratios_list.size() != 3) throw ConfigError("split.ratios", "expected three comma-separated ratios");
  const SplitRatios ratios{ratios_list[0], ratios_list[1], ratios_list[2]};

  const auto loaded = load_labeled_reviews(in, {false, true});
  const auto parts = split(loaded.records, ratios, s.seed());
  const auto prefix = s.str("prefix", "");
  const std::pair<const char*, const std::vector<LabeledReview>*> outputs[] = {
      {"train", &parts.train}, {"validation", &parts.validation}, {"test", &parts.test}};
  std::cout << "split:";
  for (const auto& [name, rows] : outputs) {
    std::vector<Sentiment> labels;
    for (const auto& r : *rows) labels.push_back(r.label);
    run.artifacts.write(prefix + name + ".csv", labeled_to_csv(*rows),
                        {{"input", in}, {"part", name}, {"distribution", distribution_text(class_distribution(labels))}});
    std::cout << " " << name << "=" << rows->size();
  }
  std::cout << "\n";
  return 0;
}

int cmd_baseline(const Run& run) {
  const auto& s = run.settings;
  const auto strict = s.flag("strict", false);
  const auto train = load_dataset(s.required("train"), strict);
  const auto test = load_dataset(s.required("test"), strict);
  const auto folds = static_cast<std::size_t>(s.positive_int("folds", 10));
  const auto labeling = labeling_name(s);

  std::vector<baselines::BaselineKind> kinds;
  const auto names = s.list("models");
  if (names.empty()) kinds.assign(baselines::kAllBaselineKinds.begin(), baselines::kAllBaselineKinds.end());
  for (const auto& n : names) {
    auto k = baselines::parse_baseline_kind(n);
    if (!k) throw ConfigError("models", "unknown model '" + n + "' (knn, nb, svm, tree, forest)");
    kinds.push_back(*k);
  }

  baselines::BaselineHyperparams hp;
  hp.set_seed(s.seed());
  const auto train_docs = tokenize_all(train.texts);
  const auto test_docs = tokenize_all(test.texts);
  std::vector<BaselineReport> rows;
  for (auto kind : kinds) {
    const auto name = std::string(baselines::to_string(kind));
    const auto cv = baselines::kfold_cv(kind, train_docs, train.labels, folds, s.seed(), hp);
    for (const auto& w : cv.warnings) std::cerr << "warning: " << name << ": " << w << "\n";
    auto [space, x] = baselines::tfidf_fit_transform(train_docs);
    baselines::BaselinePipeline pipeline{std::move(space), baselines::train_baseline(kind, x, train.labels, hp)};
    const double train_acc = accuracy(baselines::predict_all(pipeline.model, x), train.labels);
    const double test_acc =
        accuracy(baselines::predict_all(pipeline.model, pipeline.features.transform_all(test_docs)), test.labels);
    rows.push_back({name, labeling, train_acc, cv.mean_accuracy, test_acc, cv.fold_accuracies});
    if (s.flag("save_models", false))
      baselines::save_baseline(pipeline, run.artifacts.resolve("baseline_" + name + ".json").string()),
          run.artifacts.write_meta(run.artifacts.resolve("baseline_" + name + ".json"), {{"model", name}});
    std::cerr << name << ": train " << format_fixed(train_acc) << " cv " << format_fixed(cv.mean_accuracy) << " test "
              << format_fixed(test_acc) << "\n";
  }
  const auto format = report_format(s, ReportFormat::csv);
  const auto out = s.str("out", format == ReportFormat::csv ? "baseline_report.csv" : "baseline_report.md");
  const auto path = run.artifacts.write(out, render_baseline_report(rows, format),
                                        {{"train", s.required("train")}, {"test", s.required("test")},
                                         {"folds", std::to_string(folds)}});
  std::cout << "baseline: " << rows.size() << " models -> " << path.string() << "\n";
  return 0;
}

int cmd_finetune(const Run& run) {
  const auto& s = run.settings;
  const auto cfg = train_config(s);
  const auto strict = s.flag("strict", false);
  const auto train_text = load_dataset(s.required("train"), strict);
  const auto val_text = load_dataset(s.required("validation"), strict);
  Meta meta = {{"train", s.required("train")}, {"validation", s.required("validation")}};
  const auto vocab = obtain_vocab(run, train_text.texts, meta);
  const auto encoder = encoder_config(s, static_cast<int>(vocab.size()), cfg.max_len);
  const auto train = encode_dataset(train_text, vocab, cfg.max_len);
  const auto validation = encode_dataset(val_text, vocab, cfg.max_len);

  auto result = fine_tune(starting_params(s, encoder), train, validation, cfg, [](int epoch, const RunHistory& h) {
    std::cerr << "epoch " << epoch << ": loss " << format_fixed(h.loss.back()) << " train "
              << format_fixed(h.train_acc.back()) << " val " << format_fixed(h.val_acc.back()) << "\n";
  });
  const auto& hist = result.history;
  meta.emplace_back("best_epoch", std::to_string(hist.best_epoch));
  meta.emplace_back("parameters", std::to_string(parameter_count(encoder)));
  meta.emplace_back("train_time_s", format_fixed(hist.duration_s, 3));

  const auto model_path = run.artifacts.resolve(s.str("out", "model.bin"));
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_params(result.best, model_path.string());
  run.artifacts.write_meta(model_path, meta);
  run.artifacts.write(s.str("history", "history.csv"), history_to_csv(hist), meta);

  std::string summary = "finetune: best epoch " + std::to_string(hist.best_epoch) + " val " +
                        format_fixed(hist.val_acc[static_cast<std::size_t>(hist.best_epoch - 1)]);
  if (auto test_path = s.str("test")) {
    const auto test = encode_dataset(load_dataset(*test_path, strict), vocab, cfg.max_len);
    RunReport r;
    r.model = s.str("model_name", "encoder");
    r.labeling = labeling_name(s);
    r.batch_size = cfg.batch_size;
    r.learning_rate = cfg.learning_rate;
    r.epochs = cfg.epochs;
    r.avg_train_acc = hist.mean_train_acc();
    r.avg_val_acc = hist.mean_val_acc();
    r.train_time_s = hist.duration_s;
    r.test_acc = dataset_accuracy(result.best, test);
    const auto format = report_format(s, ReportFormat::csv);
    run.artifacts.write(s.str("report", format == ReportFormat::csv ? "finetune_report.csv" : "finetune_report.md"),
                        render_report({r}, format), meta);
    summary += " test " + format_fixed(r.test_acc);
  }
  std::cout << summary << " -> " << model_path.string() << "\n";
  return 0;
}

int cmd_grid(const Run& run) {
  const auto& s = run.settings;
  const auto base = train_config(s);
  GridAxes axes;
  axes.learning_rates =
      KeyValueConfig::parse_list<double>("grid.lrs", s.str("grid.lrs", "1e-5,2e-5,3e-5"), KeyValueConfig::parse_double);
  axes.batch_sizes =
      KeyValueConfig::parse_list<int>("grid.batch_sizes", s.str("grid.batch_sizes", "16,32"), KeyValueConfig::parse_int);
  axes.epochs = KeyValueConfig::parse_list<int>("grid.epochs", s.str("grid.epochs", "10"), KeyValueConfig::parse_int);
  const auto jobs = s.positive_int("jobs", 1);

  const auto strict = s.flag("strict", false);
  const auto train_text = load_dataset(s.required("train"), strict);
  Meta meta = {{"train", s.required("train")}, {"validation", s.required("validation")}, {"test", s.required("test")}};
  const auto vocab = obtain_vocab(run, train_text.texts, meta);
  const auto encoder = encoder_config(s, static_cast<int>(vocab.size()), base.max_len);
  const auto train = encode_dataset(train_text, vocab, base.max_len);
  const auto validation = encode_dataset(load_dataset(s.required("validation"), strict), vocab, base.max_len);
  const auto test = encode_dataset(load_dataset(s.required("test"), strict), vocab, base.max_len);

  GridOptions opts;
  opts.model_name = s.str("model_name", "encoder");
  opts.labeling = labeling_name(s);
  opts.jobs = static_cast<unsigned>(jobs);
  if (auto init = s.str("init")) opts.initial = load_pretrained<float>(*init, encoder, s.seed());
  const auto cells = grid_search(encoder, base, axes, {&train, &validation, &test}, opts);

  std::vector<RunReport> rows;
  std::vector<csv::Row> history;
  std::size_t failed = 0;
  for (const auto& c : cells) {
    rows.push_back(c.report);
    if (c.report.error) {
      ++failed;
      std::cerr << "cell lr=" << format_compact(c.report.learning_rate) << " batch=" << c.report.batch_size
                << " epochs=" << c.report.epochs << " failed: " << *c.report.error << "\n";
    }
    for (std::size_t e = 0; e < c.history.train_acc.size(); ++e)
      history.push_back({format_compact(c.report.learning_rate), std::to_string(c.report.batch_size),
                         std::to_string(c.report.epochs), std::to_string(e + 1), format_fixed(c.history.train_acc[e], 6),
                         format_fixed(c.history.val_acc[e], 6), format_fixed(c.history.loss[e], 6)});
  }
  meta.emplace_back("cells", std::to_string(cells.size()));
  meta.emplace_back("failed_cells", std::to_string(failed));
  meta.emplace_back("jobs", std::to_string(jobs));
  const auto format = report_format(s, ReportFormat::csv);
  const auto path = run.artifacts.write(s.str("out", format == ReportFormat::csv ? "grid_report.csv" : "grid_report.md"),
                                        render_report(rows, format), meta);
  run.artifacts.write(s.str("history", "grid_history.csv"),
                      csv::write({"learning_rate", "batch_size", "epochs", "epoch", "train_acc", "val_acc", "loss"},
                                 history),
                      meta);
  std::cout << "grid: " << cells.size() << " cells, " << failed << " failed -> " << path.string() << "\n";
  if (failed) throw DataError(std::to_string(failed) + " of " + std::to_string(cells.size()) + " grid cells failed");
  return 0;
}

bool is_encoder_weights(const std::string& path) {
  const auto data = text::read_file(path);
  return data.size() >= 8 && data.compare(0, 8, std::string(kWeightsMagic, 8)) == 0;
}

int cmd_eval(const Run& run) {
  const auto& s = run.settings;
  const auto model = s.required("model");
  const auto data = load_dataset(s.required("in"), s.flag("strict", false));
  std::vector<int> predictions;
  std::string kind;
  if (is_encoder_weights(model)) {
    kind = "encoder";
    const auto params = load_params<float>(model);
    const auto vocab = load_vocab(s.required("vocab"));
    if (static_cast<int>(vocab.size()) != params.config.vocab_size)
      throw ConfigError("vocab", "has " + std::to_string(vocab.size()) + " entries, model expects " +
                                     std::to_string(params.config.vocab_size));
    const int max_len = static_cast<int>(s.integer("max_len", params.config.max_positions));
    const auto encoded = encode_dataset(data, vocab, max_len);
    predictions = predict_classes(params, encoded.inputs);
  } else {
    const auto pipeline = baselines::load_baseline(model);
    kind = std::string(baselines::to_string(pipeline.model.kind));
    for (const auto& doc : tokenize_all(data.texts)) predictions.push_back(pipeline.predict(doc));
  }

  const auto m = confusion(predictions, data.labels);
  const double acc = accuracy(predictions, data.labels);
  nlohmann::ordered_json j;
  j["model"] = kind;
  j["examples"] = data.labels.size();
  j["accuracy"] = acc;
  j["confusion"] = nlohmann::ordered_json::array();
  for (int g = 0; g < 3; ++g) {
    auto row = nlohmann::ordered_json::array();
    for (int p = 0; p < 3; ++p) row.push_back(m.at(g, p));
    j["confusion"].push_back(row);
  }
  for (int c = 0; c < 3; ++c) {
    const auto b = m.one_vs_rest(c);
    j["per_class"][std::string(to_string(sentiment_from_class(c)))] = {{"tp", b.tp}, {"tn", b.tn}, {"fp", b.fp}, {"fn", b.fn}};
  }
  const auto path = run.artifacts.write(s.str("out", "eval.json"), j.dump(2) + "\n", {{"model", model}, {"input", s.required("in")}});
  std::cout << "eval: accuracy " << format_fixed(acc) << " on " << data.labels.size() << " examples -> "
            << path.string() << "\n";
  return 0;
}

int cmd_report(const Run& run) {
  const auto& s = run.settings;
  const auto inputs = s.list("in");
  if (inputs.empty()) throw ConfigError("in", "report needs at least one report CSV");
  std::vector<RunReport> runs;
  std::vector<BaselineReport> baseline_rows;
  for (const auto& path : inputs) {
    const auto data = text::read_file(path);
    if (data.rfind("model,labeling,train_acc,", 0) == 0) {
      const auto records = csv::parse(data);
      for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i].fields;
        if (f.size() != 6) throw DataError(path + ": wrong field count", i);
        BaselineReport r{f[0], f[1], KeyValueConfig::parse_double("train_acc", f[2]),
                         KeyValueConfig::parse_double("cv_acc", f[3]), KeyValueConfig::parse_double("test_acc", f[4]), {}};
        for (const auto& a : text::split(f[5], ';'))
          if (!a.empty()) r.fold_accs.push_back(KeyValueConfig::parse_double("fold_accs", a));
        baseline_rows.push_back(std::move(r));
      }
    } else {
      auto rows = parse_report_csv(data);
      runs.insert(runs.end(), rows.begin(), rows.end());
    }
  }
  const auto format = report_format(s, ReportFormat::markdown);
  std::string body;
  if (!baseline_rows.empty()) body += render_baseline_report(baseline_rows, format);
  if (!runs.empty() || baseline_rows.empty()) {
    if (!body.empty()) body += "\n";
    body += render_report(runs, format);
  }
  const auto path = run.artifacts.write(s.str("out", format == ReportFormat::csv ? "report.csv" : "report.md"), body,
                                        {{"inputs", text::join(inputs, ",")}});
  std::cout << "report: " << runs.size() + baseline_rows.size() << " rows -> " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Command table

struct Command {
  const char* name;
  const char* help;
  std::function<int(const Run&)> run;
  std::function<void(CLI::App*, FlagBinder&)> flags;
};

void data_flags(CLI::App* c, FlagBinder& b) {
  b.add(c, "--train", "train", "training split CSV");
  b.add(c, "--validation", "validation", "validation split CSV");
  b.add(c, "--test", "test", "test split CSV");
  b.add(c, "--labeling", "labeling", "labeling method recorded in reports: score|lexicon");
  b.add_switch(c, "--strict", "strict", "fail on the first malformed row");
}

void model_flags(CLI::App* c, FlagBinder& b) {
  b.add(c, "--vocab", "vocab", "WordPiece vocabulary (built from training data when absent)");
  b.add(c, "--layers", "encoder.L", "transformer layers");
  b.add(c, "--hidden", "encoder.H", "hidden size");
  b.add(c, "--heads", "encoder.A", "attention heads");
  b.add(c, "--ffn", "encoder.ffn", "feed-forward size, 0 for 4*hidden");
  b.add(c, "--vocab-size", "encoder.vocab", "words kept when building a vocabulary");
  b.add(c, "--dropout", "encoder.dropout", "dropout rate during training");
  b.add(c, "--max-len", "max_len", "sequence length including [CLS] and [SEP]");
  b.add(c, "--decay", "decay", "per-epoch learning-rate decay, 0 disables");
  b.add(c, "--grad-clip", "grad_clip", "global gradient-norm clip, 0 disables");
  b.add(c, "--init", "init", "weights file to start from (pretrained hook)");
  b.add(c, "--model-name", "model_name", "model name recorded in reports");
  b.add(c, "--format", "format", "report format: csv|markdown");
  b.add(c, "--history", "history", "per-epoch history CSV");
}

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"ingest", "validate and clean an exported review file", cmd_ingest,
       [](CLI::App* c, FlagBinder& b) {
         b.add(c, "--in", "in", "reviews CSV or JSONL");
         b.add(c, "--out", "out", "cleaned reviews CSV");
         b.add(c, "--stopwords", "stopwords", "comma-separated keyword/stopword files");
         b.add_switch(c, "--dedup", "dedup", "drop repeated review ids");
         b.add_switch(c, "--strict", "strict", "fail on the first malformed row");
       }},
      {"label", "attach score- or lexicon-based sentiment labels", cmd_label,
       [](CLI::App* c, FlagBinder& b) {
         b.add(c, "--in", "in", "reviews CSV or JSONL");
         b.add(c, "--out", "out", "labeled CSV");
         b.add(c, "--method", "method", "score|lexicon");
         b.add(c, "--lexicon", "lexicon", "comma-separated lexicon TSV files");
         b.add_switch(c, "--strict", "strict", "fail on the first malformed row");
       }},
      {"split", "seeded train/validation/test split of a labeled file", cmd_split,
       [](CLI::App* c, FlagBinder& b) {
         b.add(c, "--in", "in", "labeled CSV");
         b.add(c, "--ratios", "split.ratios", "train,validation,test fractions");
         b.add(c, "--prefix", "prefix", "output file name prefix");
       }},
      {"baseline", "TF-IDF classical baselines with k-fold cross-validation", cmd_baseline,
       [](CLI::App* c, FlagBinder& b) {
         data_flags(c, b);
         b.add(c, "--models", "models", "comma-separated subset of knn,nb,svm,tree,forest");
         b.add(c, "--folds", "folds", "cross-validation folds");
         b.add(c, "--out", "out", "report file");
         b.add(c, "--format", "format", "report format: csv|markdown");
         b.add_switch(c, "--save-models", "save_models", "write each fitted model as JSON");
       }},
      {"finetune", "fine-tune the encoder once, keeping the best validation snapshot", cmd_finetune,
       [](CLI::App* c, FlagBinder& b) {
         data_flags(c, b);
         model_flags(c, b);
         b.add(c, "--lr", "learning_rate", "Adam learning rate");
         b.add(c, "--batch-size", "batch_size", "minibatch size");
         b.add(c, "--epochs", "epochs", "training epochs");
         b.add(c, "--out", "out", "best weights file");
         b.add(c, "--report", "report", "single-row report file (needs --test)");
       }},
      {"grid", "fine-tune every learning-rate x batch-size x epochs cell", cmd_grid,
       [](CLI::App* c, FlagBinder& b) {
         data_flags(c, b);
         model_flags(c, b);
         b.add(c, "--lrs", "grid.lrs", "comma-separated learning rates");
         b.add(c, "--batch-sizes", "grid.batch_sizes", "comma-separated batch sizes");
         b.add(c, "--epochs", "grid.epochs", "comma-separated epoch counts");
         b.add(c, "--jobs", "jobs", "cells trained concurrently");
         b.add(c, "--out", "out", "report file");
       }},
      {"eval", "accuracy and confusion matrix of a saved model", cmd_eval,
       [](CLI::App* c, FlagBinder& b) {
         b.add(c, "--model", "model", "encoder weights or baseline JSON");
         b.add(c, "--in", "in", "labeled CSV to score");
         b.add(c, "--vocab", "vocab", "vocabulary used to train an encoder model");
         b.add(c, "--max-len", "max_len", "sequence length (defaults to the model's)");
         b.add(c, "--out", "out", "evaluation JSON");
         b.add_switch(c, "--strict", "strict", "fail on the first malformed row");
       }},
      {"report", "render report CSVs as csv or markdown tables", cmd_report,
       [](CLI::App* c, FlagBinder& b) {
         b.add(c, "--in", "in", "comma-separated report CSVs");
         b.add(c, "--format", "format", "csv|markdown");
         b.add(c, "--out", "out", "output file");
       }},
  };
  return table;
}

}  // namespace
}  // namespace revsent::cli

int main(int argc, char** argv) {
  using namespace revsent::cli;
  CLI::App app{"revsent: weak labeling, classical baselines and transformer fine-tuning for app reviews"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Settings settings;
  FlagBinder binder(settings);
  std::string config_path;
  app.add_option("--config", config_path, "run config file of key = value lines; flags override it");
  binder.add(&app, "--seed", "seed", "seed for every random choice");
  binder.add(&app, "--out-dir", "output_dir", std::string("output directory (env ") + kOutputDirEnv + " overrides the config)");

  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands()) {
    auto* sub = app.add_subcommand(c.name, c.help);
    c.flags(sub, binder);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (!config_path.empty()) settings.load_file(config_path);
    binder.apply(&app);
    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      binder.apply(sub);
      const Run run{settings, Artifacts(output_dir(settings), join_args(argc, argv), settings.seed())};
      return cmd->run(run);
    }
  } catch (const std::exception& e) {
    std::cerr << error_line(e) << "\n";
    return 1;
  }
  return 2;
}
