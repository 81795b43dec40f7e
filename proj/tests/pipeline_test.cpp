// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/pipeline.hpp"

#include <cstdlib>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dupo/errors.hpp"
#include "dupo/rerank.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace dupo;
using namespace dupo::pipeline;

namespace {

std::string primal_line(const std::string& id, const std::string& text,
                        const std::optional<std::string>& ref = std::nullopt,
                        const std::string& domain = "math") {
  nlohmann::json obj{{"v", 1}, {"id", id}, {"text", text}, {"domain", domain}};
  if (ref) obj["reference_answer"] = *ref;
  return obj.dump() + "\n";
}

PipelineConfig desk_config() { return PipelineConfig::preset("desk"); }

}  // namespace

TEST_CASE("dedup collapses whitespace-equivalent texts, keeping first occurrences") {
  testing::TempDir dir;
  const auto in = dir.file("in.jsonl");
  const auto out = dir.file("out.jsonl");
  testing::write_file(in, primal_line("a", "What is 3 plus 5?") +
                              primal_line("b", "What  is 3\tplus 5?") +
                              primal_line("c", "What is 3 plus 5?") +
                              primal_line("d", "Something else with 7."));
  const auto stats = cmd_dedup(in, out);
  CHECK(stats.read == 4);
  CHECK(stats.kept == 2);
  CHECK(stats.dropped == 2);

  const auto kept = read_primal_records(out);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "a");  // original text, first occurrence
  CHECK(kept[0].text == "What is 3 plus 5?");
  CHECK(kept[1].id == "d");
}

TEST_CASE("dedup reports malformed lines with their number") {
  testing::TempDir dir;
  const auto in = dir.file("in.jsonl");
  testing::write_file(in, primal_line("a", "text 1") + "{oops\n");
  try {
    cmd_dedup(in, dir.file("out.jsonl"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("duplicate ids are rejected on read") {
  testing::TempDir dir;
  const auto in = dir.file("in.jsonl");
  testing::write_file(in, primal_line("a", "x 1") + primal_line("a", "y 2"));
  CHECK_THROWS_AS(read_primal_records(in), DataError);
}

TEST_CASE("unknown record keys are rejected") {
  testing::TempDir dir;
  const auto in = dir.file("in.jsonl");
  testing::write_file(in, "{\"v\":1,\"id\":\"a\",\"text\":\"t 1\",\"bogus\":true}\n");
  CHECK_THROWS_AS(read_primal_records(in), DataError);
}

TEST_CASE("construct writes dual records for the case study") {
  testing::TempDir dir;
  const auto in = dir.file("primals.jsonl");
  const auto out = dir.file("duals.jsonl");
  testing::write_file(in, primal_line("aime-geo", testing::kAimeQuestion) +
                              primal_line("words", "What is ten minus two?"));
  const auto stats = cmd_construct(in, out, desk_config());
  CHECK(stats.primals == 2);
  CHECK(stats.duals == 2);
  CHECK(stats.no_candidates == 1);
  CHECK(stats.duals_per_primal.at(2) == 1);

  const auto duals = read_dual_records(out);
  REQUIRE(duals.size() == 2);
  CHECK(duals[0].hidden_value == "13");
  CHECK(duals[1].hidden_value == "6");
  CHECK(duals[0].status == "unfiltered");
  CHECK(duals[0].masked_text.find("Variable_{") != std::string::npos);
}

TEST_CASE("construct yields the expected duals-per-primal ratio") {
  // 27 primals with 3 numbers and 13 with 4: 133/40 = 3.325 duals per primal.
  testing::TempDir dir;
  const auto in = dir.file("primals.jsonl");
  std::string content;
  for (int i = 0; i < 40; ++i) {
    const int numbers = i < 27 ? 3 : 4;
    std::string text = "Start with " + std::to_string(10 + i);
    for (int k = 1; k < numbers; ++k) text += " then add " + std::to_string(100 + 10 * i + k);
    content += primal_line("p" + std::to_string(i), text + ".");
  }
  testing::write_file(in, content);

  auto cfg = desk_config();
  cfg.max_duals = 8;
  const auto stats = cmd_construct(in, dir.file("duals.jsonl"), cfg);
  CHECK(stats.primals == 40);
  const double ratio = static_cast<double>(stats.duals) / 40.0;
  CHECK(ratio == doctest::Approx(3.325).epsilon(1e-9));
}

namespace {

struct FilterFixture {
  testing::TempDir dir;
  std::string primals_path;
  std::string duals_path;
  std::vector<DualRecord> duals;
  PipelineConfig cfg = desk_config();

  FilterFixture() {
    primals_path = dir.file("primals.jsonl");
    duals_path = dir.file("duals.jsonl");
    testing::write_file(primals_path, primal_line("aime-geo", testing::kAimeQuestion));
    cmd_construct(primals_path, duals_path, cfg);
    duals = read_dual_records(duals_path);
    cfg.n_trajectories = 3;
  }

  std::unique_ptr<client::ScriptedBackend> case_study_backend() const {
    auto backend = std::make_unique<client::ScriptedBackend>(client::FixedText{"\\boxed{-1}"});
    backend->add_rule(client::Matcher{{}, client::Role::Primal},
                      client::RoundRobin{{"a \\boxed{468}", "b \\boxed{108}", "c \\boxed{312}"}});
    for (const auto& dual : duals) {
      backend->add_rule(client::Matcher{{dual.variable, "468"}, client::Role::Dual},
                        client::FixedText{"\\boxed{" + dual.hidden_value + "}"});
    }
    return backend;
  }
};

}  // namespace

TEST_CASE("sample-filter keeps the case-study duals") {
  FilterFixture fx;
  const auto out = fx.dir.file("kept.jsonl");
  const auto report = fx.dir.file("report.jsonl");
  auto backend = fx.case_study_backend();
  const auto stats =
      cmd_sample_and_filter(fx.primals_path, fx.duals_path, out, report, *backend, fx.cfg);
  CHECK(stats.primals == 1);
  CHECK(stats.duals_in == 2);
  CHECK(stats.kept == 2);
  CHECK(stats.failed_primals == 0);

  for (const auto& rec : read_dual_records(out)) CHECK(rec.status == "kept");

  // report lines carry the principle bookkeeping
  std::istringstream lines(testing::read_file(report));
  std::string line;
  int entries = 0;
  while (std::getline(lines, line)) {
    const auto obj = nlohmann::json::parse(line);
    CHECK(obj.at("n_candidates_solving") == 1);
    CHECK(obj.at("kept") == true);
    CHECK(obj.at("ablation") == false);
    ++entries;
  }
  CHECK(entries == 2);
}

TEST_CASE("sample-filter drops duals nobody or everybody solves") {
  FilterFixture fx;
  const auto out = fx.dir.file("kept.jsonl");

  SUBCASE("not answerable") {
    client::ScriptedBackend backend(client::FixedText{"\\boxed{-1}"});
    backend.add_rule(client::Matcher{{}, client::Role::Primal},
                     client::RoundRobin{{"a \\boxed{468}", "b \\boxed{108}", "c \\boxed{312}"}});
    const auto stats =
        cmd_sample_and_filter(fx.primals_path, fx.duals_path, out, "", backend, fx.cfg);
    CHECK(stats.kept == 0);
    CHECK(stats.dropped_not_answerable == 2);
    for (const auto& rec : read_dual_records(out)) CHECK(rec.status == "dropped_not_answerable");
  }

  SUBCASE("not unique: the dual is insensitive to the answer") {
    client::ScriptedBackend backend(client::FixedText{"\\boxed{-1}"});
    backend.add_rule(client::Matcher{{}, client::Role::Primal},
                     client::RoundRobin{{"a \\boxed{468}", "b \\boxed{108}", "c \\boxed{312}"}});
    for (const auto& dual : fx.duals) {
      // answers the hidden value no matter which candidate is plugged in
      backend.add_rule(client::Matcher{{dual.variable}, client::Role::Dual},
                       client::FixedText{"\\boxed{" + dual.hidden_value + "}"});
    }
    const auto stats =
        cmd_sample_and_filter(fx.primals_path, fx.duals_path, out, "", backend, fx.cfg);
    CHECK(stats.kept == 0);
    CHECK(stats.dropped_not_unique == 2);
  }
}

TEST_CASE("sample-filter with selection disabled is a flagged pass-through") {
  FilterFixture fx;
  fx.cfg.selection_enabled = false;
  const auto out = fx.dir.file("kept.jsonl");
  const auto report = fx.dir.file("report.jsonl");
  client::ScriptedBackend backend(client::FixedText{"\\boxed{-1}"});
  const auto stats =
      cmd_sample_and_filter(fx.primals_path, fx.duals_path, out, report, backend, fx.cfg);
  CHECK(stats.ablation);
  CHECK(stats.kept == 2);
  std::istringstream lines(testing::read_file(report));
  std::string line;
  while (std::getline(lines, line)) {
    CHECK(nlohmann::json::parse(line).at("ablation") == true);
  }
}

TEST_CASE("a second filter pass leaves dropped records untouched") {
  FilterFixture fx;
  const auto pass1 = fx.dir.file("pass1.jsonl");
  client::ScriptedBackend never_solves(client::FixedText{"\\boxed{-1}"});
  never_solves.add_rule(client::Matcher{{}, client::Role::Primal},
                        client::RoundRobin{{"a \\boxed{468}", "b \\boxed{108}"}});
  cmd_sample_and_filter(fx.primals_path, fx.duals_path, pass1, "", never_solves, fx.cfg);

  const auto pass2 = fx.dir.file("pass2.jsonl");
  auto backend = fx.case_study_backend();
  const auto stats =
      cmd_sample_and_filter(fx.primals_path, pass1, pass2, "", *backend, fx.cfg);
  CHECK(stats.kept == 0);  // everything was already dropped
  for (const auto& rec : read_dual_records(pass2)) CHECK(rec.status == "dropped_not_answerable");
}

TEST_CASE("dual records referencing unknown primals fail loudly") {
  FilterFixture fx;
  auto duals = read_dual_records(fx.duals_path);
  duals[0].primal_id = "ghost";
  write_dual_records(fx.duals_path, duals);
  client::ScriptedBackend backend(client::FixedText{"x"});
  CHECK_THROWS_AS(cmd_sample_and_filter(fx.primals_path, fx.duals_path, fx.dir.file("o.jsonl"),
                                        "", backend, fx.cfg),
                  DataError);
}

namespace {

// Exact two-sum oracle: primal completions from a fixed candidate table,
// dual completions computed as answer minus the remaining addend.
testing::FunctionBackend::Fn exact_twosum_fn(
    std::function<std::vector<std::string>(const std::string& primal_id)> candidates) {
  return [candidates](const client::CompletionRequest& req) -> std::vector<std::string> {
    if (req.tag.role == client::Role::Primal) {
      std::vector<std::string> out;
      const auto answers = candidates(req.tag.primal_id);
      for (int i = 0; i < req.n; ++i) {
        out.push_back("\\boxed{" + answers[i % answers.size()] + "}");
      }
      return out;
    }
    const auto tokens = mathexpr::tokenize(req.prompt);
    std::vector<long long> numbers;
    for (const auto& t : tokens.tokens) {
      if (t.kind == mathexpr::TokenKind::Number) numbers.push_back(std::stoll(t.text));
    }
    return std::vector<std::string>(
        req.n, "\\boxed{" + std::to_string(numbers[1] - numbers[0]) + "}");
  };
}

std::string twosum_corpus(int count, std::mt19937_64& rng, bool with_reference) {
  std::string content;
  for (int i = 0; i < count; ++i) {
    const int a = static_cast<int>(rng() % 50);
    const int b = static_cast<int>(rng() % 50);
    const std::string text =
        "What is " + std::to_string(a) + " plus " + std::to_string(b) + "?";
    content += primal_line("ts" + std::to_string(i), text,
                           with_reference ? std::optional<std::string>(std::to_string(a + b))
                                          : std::nullopt,
                           "two_sum");
  }
  return content;
}

}  // namespace

TEST_CASE("rerank command picks every correct two-sum answer with an exact solver") {
  testing::TempDir dir;
  const auto primals = dir.file("primals.jsonl");
  std::mt19937_64 rng(31);
  testing::write_file(primals, twosum_corpus(20, rng, true));

  auto cfg = desk_config();
  cfg.k_dual_samples = 2;
  const auto records = read_primal_records(primals);
  testing::FunctionBackend backend(exact_twosum_fn([&](const std::string& id) {
    // one correct candidate hidden among 8, position varies by id
    for (const auto& rec : records) {
      if (rec.id != id) continue;
      const int correct_at = static_cast<int>(id.back() - '0') % 8;
      std::vector<std::string> answers(8);
      for (int i = 0; i < 8; ++i) {
        const long long truth = std::stoll(*rec.reference_answer);
        answers[i] = std::to_string(i == correct_at ? truth : truth + 5 + i);
      }
      return answers;
    }
    return std::vector<std::string>{"0"};
  }));

  const auto summary = cmd_rerank(primals, dir.file("results.jsonl"), backend, cfg);
  CHECK(summary.total == 20);
  CHECK(summary.degraded == 0);
  REQUIRE(summary.pick_accuracy);
  CHECK(*summary.pick_accuracy == 1.0);
}

TEST_CASE("rerank command survives a noisy dual solver") {
  testing::TempDir dir;
  const auto primals = dir.file("primals.jsonl");
  std::mt19937_64 corpus_rng(77);
  testing::write_file(primals, twosum_corpus(200, corpus_rng, true));
  const auto records = read_primal_records(primals);

  auto cfg = desk_config();
  cfg.k_dual_samples = 8;

  // per-dual success 0.7 when the plugged answer is correct, 0.05 otherwise
  auto noise_rng = std::make_shared<std::mt19937_64>(424242);
  testing::FunctionBackend backend([&, noise_rng](const client::CompletionRequest& req)
                                       -> std::vector<std::string> {
    if (req.tag.role == client::Role::Primal) {
      const auto& rec = records[static_cast<std::size_t>(
          std::stoll(req.tag.primal_id.substr(2)))];
      const long long truth = std::stoll(*rec.reference_answer);
      std::vector<std::string> out;
      for (int i = 0; i < req.n; ++i) {
        out.push_back("\\boxed{" + std::to_string(i == 0 ? truth : truth + 7 + i) + "}");
      }
      return out;
    }
    const auto tokens = mathexpr::tokenize(req.prompt);
    std::vector<long long> numbers;
    for (const auto& t : tokens.tokens) {
      if (t.kind == mathexpr::TokenKind::Number) numbers.push_back(std::stoll(t.text));
    }
    const long long reconstruction = numbers[1] - numbers[0];
    // correctness of the plugged answer is visible through the hidden value:
    // req.prompt's masked question came from "a plus b", so reconstruction is
    // right iff the answer was. Apply the success probabilities to it.
    std::vector<std::string> out;
    for (int i = 0; i < req.n; ++i) {
      const double u = static_cast<double>((*noise_rng)() >> 11) * 0x1.0p-53;
      const auto& rec = records[static_cast<std::size_t>(
          std::stoll(req.tag.primal_id.substr(2)))];
      // does this prompt carry the correct final answer?
      const long long a_plus_b = std::stoll(*rec.reference_answer);
      const bool correct_answer_plugged =
          numbers[1] == a_plus_b;
      const bool succeed = correct_answer_plugged ? u < 0.7 : u < 0.05;
      out.push_back(succeed ? "\\boxed{" + std::to_string(reconstruction) + "}"
                            : "\\boxed{-12345}");
    }
    return out;
  });

  const auto summary = cmd_rerank(primals, dir.file("results.jsonl"), backend, cfg);
  CHECK(summary.total == 200);
  REQUIRE(summary.pick_accuracy);
  CHECK(*summary.pick_accuracy >= 0.9);
}

TEST_CASE("rerank outputs are byte-identical across cached runs") {
  testing::TempDir dir;
  const auto primals = dir.file("primals.jsonl");
  std::mt19937_64 rng(5);
  testing::write_file(primals, twosum_corpus(6, rng, true));
  const auto records = read_primal_records(primals);

  auto cfg = desk_config();
  cfg.k_dual_samples = 2;
  testing::FunctionBackend inner(exact_twosum_fn([&](const std::string& id) {
    std::vector<std::string> answers;
    for (const auto& rec : records) {
      if (rec.id == id) {
        const long long truth = std::stoll(*rec.reference_answer);
        for (int i = 0; i < 8; ++i) answers.push_back(std::to_string(truth + (i == 2 ? 0 : i + 3)));
      }
    }
    return answers;
  }));
  auto cache = client::cached(inner, dir.file("cache.jsonl"));

  const auto out1 = dir.file("r1.jsonl");
  const auto out2 = dir.file("r2.jsonl");
  cmd_rerank(primals, out1, *cache, cfg);
  const int calls_after_first = inner.calls();
  cmd_rerank(primals, out2, *cache, cfg);
  CHECK(inner.calls() == calls_after_first);  // pure replay
  CHECK(testing::read_file(out1) == testing::read_file(out2));
}

TEST_CASE("deleting reference answers changes no winner") {
  testing::TempDir dir;
  const auto with_ref = dir.file("with_ref.jsonl");
  const auto without_ref = dir.file("without_ref.jsonl");
  std::mt19937_64 rng(9);
  const auto corpus = twosum_corpus(10, rng, true);
  testing::write_file(with_ref, corpus);
  std::mt19937_64 rng2(9);
  testing::write_file(without_ref, twosum_corpus(10, rng2, false));

  auto cfg = desk_config();
  cfg.k_dual_samples = 2;
  auto make_backend = [&](const std::string& path) {
    const auto records = read_primal_records(with_ref);  // truth source for candidates
    (void)path;
    return testing::FunctionBackend(exact_twosum_fn([records](const std::string& id) {
      for (const auto& rec : records) {
        if (rec.id == id) {
          const long long truth = std::stoll(*rec.reference_answer);
          std::vector<std::string> answers;
          for (int i = 0; i < 8; ++i) {
            answers.push_back(std::to_string(i == 4 ? truth : truth + 11 + i));
          }
          return answers;
        }
      }
      return std::vector<std::string>{"0"};
    }));
  };

  auto b1 = make_backend(with_ref);
  auto b2 = make_backend(without_ref);
  const auto r1 = dir.file("r1.jsonl");
  const auto r2 = dir.file("r2.jsonl");
  const auto s1 = cmd_rerank(with_ref, r1, b1, cfg);
  const auto s2 = cmd_rerank(without_ref, r2, b2, cfg);

  const auto rec1 = read_rerank_records(r1);
  const auto rec2 = read_rerank_records(r2);
  REQUIRE(rec1.size() == rec2.size());
  for (std::size_t i = 0; i < rec1.size(); ++i) {
    CHECK(rec1[i].winner_index == rec2[i].winner_index);
  }
  CHECK(s1.pick_accuracy == 1.0);
  CHECK_FALSE(s2.pick_accuracy);  // nothing to evaluate against
}

TEST_CASE("an empty primal file reranks to an empty output") {
  testing::TempDir dir;
  const auto primals = dir.file("empty.jsonl");
  testing::write_file(primals, "");
  client::ScriptedBackend backend(client::FixedText{"\\boxed{0}"});
  const auto out = dir.file("results.jsonl");
  const auto summary = cmd_rerank(primals, out, backend, desk_config());
  CHECK(summary.total == 0);
  CHECK(testing::read_file(out).empty());
}

TEST_CASE("commands are idempotent: identical inputs give identical bytes") {
  testing::TempDir dir;
  const auto in = dir.file("primals.jsonl");
  testing::write_file(in, primal_line("aime-geo", testing::kAimeQuestion) +
                              primal_line("two", "Add 4 and 9 please."));

  const auto d1 = dir.file("dedup1.jsonl");
  const auto d2 = dir.file("dedup2.jsonl");
  cmd_dedup(in, d1);
  cmd_dedup(in, d2);
  CHECK(testing::read_file(d1) == testing::read_file(d2));

  const auto c1 = dir.file("duals1.jsonl");
  const auto c2 = dir.file("duals2.jsonl");
  const auto cfg = desk_config();
  cmd_construct(in, c1, cfg);
  cmd_construct(in, c2, cfg);
  CHECK(testing::read_file(c1) == testing::read_file(c2));
  CHECK_FALSE(testing::read_file(c1).empty());
}

TEST_CASE("train-toy writes the curve and reports the final accuracy") {
  testing::TempDir dir;
  auto cfg = desk_config();
  cfg.train.steps = 30;
  const auto csv = dir.file("train_report.csv");
  const auto summary = cmd_train_toy(csv, cfg);
  CHECK(summary.steps == 30);
  CHECK(summary.final_forward_acc_analytic > 0.2);
  const auto content = testing::read_file(csv);
  CHECK(content.rfind("step,mean_reward,forward_acc_analytic", 0) == 0);
  CHECK(std::count(content.begin(), content.end(), '\n') == 31);
}

TEST_CASE("mt-score reproduces the case-study ordering") {
  testing::TempDir dir;
  const auto pairs = dir.file("pairs.jsonl");
  nlohmann::json p1{{"v", 1},         {"id", "mt1"},
                    {"source", testing::kMtSource}, {"candidate_translation", testing::kMtCandidate1},
                    {"source_lang", "en"},          {"target_lang", "zh"}};
  nlohmann::json p2{{"v", 1},         {"id", "mt2"},
                    {"source", testing::kMtSource}, {"candidate_translation", testing::kMtCandidate2},
                    {"source_lang", "en"},          {"target_lang", "zh"}};
  testing::write_file(pairs, p1.dump() + "\n" + p2.dump() + "\n");

  client::ScriptedBackend backend(client::FixedText{"unrelated text"});
  backend.add_rule(client::Matcher{{testing::kMtCandidate1}, {}},
                   client::FixedText{testing::kMtBack1});
  backend.add_rule(client::Matcher{{testing::kMtCandidate2}, {}},
                   client::FixedText{testing::kMtBack2});

  const auto out = dir.file("scores.jsonl");
  const auto stats = cmd_mt_score(pairs, out, backend, desk_config());
  CHECK(stats.pairs == 2);
  CHECK(stats.failed == 0);

  std::istringstream lines(testing::read_file(out));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("reward").get<double>() > rows[1].at("reward").get<double>());
  CHECK(rows[0].at("mean_bleu").get<double>() > rows[1].at("mean_bleu").get<double>());
}

TEST_CASE("mt-score: echo round trip gives reward 1, empty back-translation fails the pair") {
  testing::TempDir dir;
  const auto pairs = dir.file("pairs.jsonl");
  nlohmann::json good{{"v", 1},
                      {"id", "echo"},
                      {"source", "alpha beta gamma"},
                      {"candidate_translation", "whatever"}};
  nlohmann::json bad{{"v", 1},
                     {"id", "empty"},
                     {"source", "alpha beta gamma"},
                     {"candidate_translation", "empties"}};
  testing::write_file(pairs, good.dump() + "\n" + bad.dump() + "\n");

  client::ScriptedBackend backend(client::FixedText{""});
  backend.add_rule(client::Matcher{{"whatever"}, {}}, client::FixedText{"alpha beta gamma"});

  const auto out = dir.file("scores.jsonl");
  const auto stats = cmd_mt_score(pairs, out, backend, desk_config());
  CHECK(stats.pairs == 1);
  CHECK(stats.failed == 1);
  std::istringstream lines(testing::read_file(out));
  std::string line;
  std::getline(lines, line);
  CHECK(nlohmann::json::parse(line).at("reward").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("config presets and file overlays") {
  const auto desk = PipelineConfig::preset("desk");
  CHECK(desk.n_trajectories == 8);
  CHECK(desk.train.lr == 0.1);
  CHECK(desk.train.batch_prompts == 64);

  const auto full = PipelineConfig::preset("paper_scale");
  CHECK(full.n_trajectories == 32);
  CHECK(full.train.batch_prompts == 512);
  CHECK(full.train.minibatch == 32);
  CHECK(full.train.lr == 1e-6);
  CHECK(full.max_tokens == 30000);
  CHECK(full.k_dual_samples == 8);

  CHECK_THROWS_AS(PipelineConfig::preset("nope"), ConfigError);

  testing::TempDir dir;
  const auto path = dir.file("config.json");
  testing::write_file(path, R"({"lambda": 2.5, "train": {"steps": 7}})");
  const auto cfg = load_config_file(path, desk);
  CHECK(cfg.lambda == 2.5);
  CHECK(cfg.train.steps == 7);
  CHECK(cfg.n_trajectories == 8);  // untouched

  testing::write_file(path, R"({"lambd": 2.5})");
  CHECK_THROWS_AS(load_config_file(path, desk), ConfigError);
  testing::write_file(path, R"({"train": {"bogus": 1}})");
  CHECK_THROWS_AS(load_config_file(path, desk), ConfigError);
  testing::write_file(path, R"({"lambda": -1})");
  CHECK_THROWS_AS(load_config_file(path, desk), ConfigError);
  testing::write_file(path, R"(not json)");
  CHECK_THROWS_AS(load_config_file(path, desk), ConfigError);
}

TEST_CASE("scripted backend settings build working backends") {
  ScriptedSettings settings;
  settings.default_program = ScriptedProgramSpec{"fixed", "\\boxed{0}", {}, 0, "", "", 0};
  ScriptedRuleSpec rule;
  rule.prompt_contains = {"marker"};
  rule.role = "dual";
  rule.program = ScriptedProgramSpec{"round_robin", "", {"one", "two"}, 0, "", "", 0};
  settings.rules.push_back(rule);

  auto backend = make_scripted_backend(settings);
  client::CompletionRequest req;
  req.prompt = "has marker inside";
  req.tag.role = client::Role::Dual;
  CHECK(backend->complete(req)[0] == "one");
  req.tag.role = client::Role::Primal;
  CHECK(backend->complete(req)[0] == "\\boxed{0}");
}

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DUPO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes follow the contract") {
  testing::TempDir dir;

  // usage errors
  CHECK(run_cli("") == 1);
  CHECK(run_cli("dedup --in /nonexistent.jsonl --out /tmp/x.jsonl") == 1);
  CHECK(run_cli("--preset bogus train-toy --out " + dir.file("t.csv")) == 1);

  // data errors
  const auto bad = dir.file("bad.jsonl");
  testing::write_file(bad, "{broken\n");
  CHECK(run_cli("dedup --in " + bad + " --out " + dir.file("out.jsonl")) == 2);

  // success
  const auto good = dir.file("good.jsonl");
  testing::write_file(good, primal_line("a", "What is 1 plus 2?"));
  CHECK(run_cli("dedup --in " + good + " --out " + dir.file("deduped.jsonl")) == 0);

  // an empty input is not an error
  const auto empty = dir.file("empty.jsonl");
  testing::write_file(empty, "");
  CHECK(run_cli("rerank --primals " + empty + " --out " + dir.file("er.jsonl")) == 0);

  const auto cfg = dir.file("cfg.json");
  testing::write_file(cfg, R"({"train": {"steps": 3, "batch_prompts": 8, "minibatch": 8}})");
  CHECK(run_cli("--config " + cfg + " train-toy --out " + dir.file("train.csv")) == 0);
  CHECK(testing::read_file(dir.file("train.csv")).rfind("step,", 0) == 0);

  // backend errors: remote pointed at a closed port, no retries
  testing::write_file(cfg, R"({"backend": {"type": "remote",
    "remote": {"base_url": "http://127.0.0.1:9", "model": "m", "max_retries": 0,
               "timeout_ms": 500}}})");
  testing::write_file(good, primal_line("a", "What is 1 plus 2?"));
  CHECK(run_cli("--config " + cfg + " rerank --primals " + good + " --out " +
                dir.file("r.jsonl")) == 3);
}

TEST_CASE("cli end-to-end: construct, filter, rerank on the case study") {
  testing::TempDir dir;
  const auto primals = dir.file("primals.jsonl");
  testing::write_file(primals, primal_line("aime-geo", testing::kAimeQuestion,
                                           std::string("468")));
  const auto duals = dir.file("duals.jsonl");
  CHECK(run_cli("construct --in " + primals + " --out " + duals) == 0);
  const auto dual_records = read_dual_records(duals);
  REQUIRE(dual_records.size() == 2);

  // a config whose scripted rules realize the case-study pattern
  nlohmann::json rules = nlohmann::json::array();
  rules.push_back({{"contains", nlohmann::json::array()},
                   {"role", "primal"},
                   {"program",
                    {{"type", "round_robin"},
                     {"responses", {"x \\boxed{468}", "y \\boxed{108}", "z \\boxed{312}"}}}}});
  for (const auto& rec : dual_records) {
    rules.push_back({{"contains", {rec.variable, "468"}},
                     {"role", "dual"},
                     {"program", {{"type", "fixed"}, {"text", "\\boxed{" + rec.hidden_value + "}"}}}});
  }
  nlohmann::json cfg{
      {"n_trajectories", 3},
      {"backend",
       {{"type", "scripted"},
        {"scripted",
         {{"default", {{"type", "fixed"}, {"text", "\\boxed{-1}"}}}, {"rules", rules}}}}}};
  const auto cfg_path = dir.file("cfg.json");
  testing::write_file(cfg_path, cfg.dump());

  const auto kept = dir.file("kept.jsonl");
  CHECK(run_cli("--config " + cfg_path + " sample-filter --primals " + primals + " --duals " +
                duals + " --out " + kept) == 0);
  for (const auto& rec : read_dual_records(kept)) CHECK(rec.status == "kept");

  const auto results = dir.file("results.jsonl");
  CHECK(run_cli("--config " + cfg_path + " rerank --primals " + primals + " --out " + results) ==
        0);
  const auto rerank_records = read_rerank_records(results);
  REQUIRE(rerank_records.size() == 1);
  CHECK(rerank_records[0].table[0].extracted_answer == "468");
  CHECK(rerank_records[0].winner_index == 0);
}
