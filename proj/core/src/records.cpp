// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/records.hpp"

#include <fstream>
#include <functional>
#include <unordered_set>

#include "dupo/errors.hpp"
#include "json.hpp"

namespace dupo::pipeline {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, std::size_t lineno, const std::string& what) {
  throw DataError(path + ":" + std::to_string(lineno) + ": " + what);
}

void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const std::exception& e) {
      fail(path, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail(path, lineno, "expected a JSON object");
    fn(lineno, obj);
  }
}

void check_keys(const std::string& path, std::size_t lineno, const json& obj,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) fail(path, lineno, "unknown key '" + key + "'");
  }
}

template <typename T>
T require(const std::string& path, std::size_t lineno, const json& obj, const char* key) {
  if (!obj.contains(key)) fail(path, lineno, std::string("missing key '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception&) {
    fail(path, lineno, std::string("bad type for key '") + key + "'");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

dualgen::PrimalQuestion PrimalRecord::to_question() const {
  dualgen::PrimalQuestion q;
  q.id = id;
  q.text = text;
  q.domain = domain;
  q.reference_answer = reference_answer;
  return q;
}

PrimalRecord PrimalRecord::from_question(const dualgen::PrimalQuestion& q) {
  PrimalRecord r;
  r.id = q.id;
  r.text = q.text;
  r.domain = q.domain;
  r.reference_answer = q.reference_answer;
  return r;
}

std::vector<PrimalRecord> read_primal_records(const std::string& path) {
  std::vector<PrimalRecord> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](std::size_t lineno, const json& obj) {
    check_keys(path, lineno, obj, {"v", "id", "text", "domain", "reference_answer"});
    PrimalRecord rec;
    rec.id = require<std::string>(path, lineno, obj, "id");
    rec.text = require<std::string>(path, lineno, obj, "text");
    const auto domain = dualgen::domain_from_string(
        obj.contains("domain") ? obj.at("domain").get<std::string>() : "math");
    if (!domain) fail(path, lineno, "unknown domain");
    rec.domain = *domain;
    if (obj.contains("reference_answer") && !obj.at("reference_answer").is_null()) {
      rec.reference_answer = obj.at("reference_answer").get<std::string>();
    }
    if (!seen.insert(rec.id).second) fail(path, lineno, "duplicate id '" + rec.id + "'");
    out.push_back(std::move(rec));
  });
  return out;
}

void write_primal_records(const std::string& path, const std::vector<PrimalRecord>& records) {
  auto out = open_out(path);
  for (const auto& rec : records) {
    json obj{{"v", 1},
             {"id", rec.id},
             {"text", rec.text},
             {"domain", dualgen::to_string(rec.domain)}};
    if (rec.reference_answer) obj["reference_answer"] = *rec.reference_answer;
    out << obj.dump() << '\n';
  }
}

dualgen::DualQuestion dual_from_record(const DualRecord& record, const std::string& primal_text,
                                       int dual_index) {
  const std::size_t at = record.masked_text.find(record.variable);
  if (at == std::string::npos ||
      record.masked_text.find(record.variable, at + 1) != std::string::npos) {
    throw DataError("dual record for '" + record.primal_id +
                    "': variable must occur exactly once in masked_text");
  }

  dualgen::DualQuestion dual;
  dual.primal_id = record.primal_id;
  dual.dual_index = dual_index;
  dual.masked.source = primal_text;
  dual.masked.variable = mathexpr::VariableId{record.variable};
  dual.masked.masked_text = record.masked_text;
  dual.masked.hidden_value = record.hidden_value;
  dual.masked.replaced_span = mathexpr::ByteSpan{at, at + record.hidden_value.size()};
  if (mathexpr::unmask(dual.masked) != primal_text) {
    throw DataError("dual record for '" + record.primal_id +
                    "': masked_text does not round-trip against the primal text");
  }
  if (record.template_id < 0 || record.template_id >= dualgen::kTemplateCount) {
    throw DataError("dual record for '" + record.primal_id + "': bad template_id");
  }
  dual.template_id = static_cast<dualgen::TemplateId>(record.template_id);
  dual.rendered_prompt_template = dualgen::make_prompt_template(dual.template_id, record.variable);
  dual.hidden_value = record.hidden_value;
  const auto status = dualgen::dual_status_from_string(record.status);
  if (!status) throw DataError("dual record for '" + record.primal_id + "': bad status");
  dual.status = *status;
  return dual;
}

DualRecord dual_to_record(const dualgen::DualQuestion& dual) {
  DualRecord rec;
  rec.primal_id = dual.primal_id;
  rec.masked_text = dual.masked.masked_text;
  rec.variable = dual.masked.variable.name;
  rec.hidden_value = dual.hidden_value;
  rec.template_id = static_cast<int>(dual.template_id);
  rec.status = dualgen::to_string(dual.status);
  return rec;
}

std::vector<DualRecord> read_dual_records(const std::string& path) {
  std::vector<DualRecord> out;
  for_each_line(path, [&](std::size_t lineno, const json& obj) {
    check_keys(path, lineno, obj,
               {"v", "primal_id", "masked_text", "variable", "hidden_value", "template_id",
                "status"});
    DualRecord rec;
    rec.primal_id = require<std::string>(path, lineno, obj, "primal_id");
    rec.masked_text = require<std::string>(path, lineno, obj, "masked_text");
    rec.variable = require<std::string>(path, lineno, obj, "variable");
    rec.hidden_value = require<std::string>(path, lineno, obj, "hidden_value");
    rec.template_id = require<int>(path, lineno, obj, "template_id");
    rec.status = require<std::string>(path, lineno, obj, "status");
    out.push_back(std::move(rec));
  });
  return out;
}

void write_dual_records(const std::string& path, const std::vector<DualRecord>& records) {
  auto out = open_out(path);
  for (const auto& rec : records) {
    json obj{{"v", 1},
             {"primal_id", rec.primal_id},
             {"masked_text", rec.masked_text},
             {"variable", rec.variable},
             {"hidden_value", rec.hidden_value},
             {"template_id", rec.template_id},
             {"status", rec.status}};
    out << obj.dump() << '\n';
  }
}

std::vector<MtPairRecord> read_mt_pair_records(const std::string& path) {
  std::vector<MtPairRecord> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](std::size_t lineno, const json& obj) {
    check_keys(path, lineno, obj,
               {"v", "id", "source", "candidate_translation", "source_lang", "target_lang"});
    MtPairRecord rec;
    rec.id = require<std::string>(path, lineno, obj, "id");
    rec.source = require<std::string>(path, lineno, obj, "source");
    rec.candidate_translation = require<std::string>(path, lineno, obj, "candidate_translation");
    if (obj.contains("source_lang")) rec.source_lang = obj.at("source_lang").get<std::string>();
    if (obj.contains("target_lang")) rec.target_lang = obj.at("target_lang").get<std::string>();
    if (!seen.insert(rec.id).second) fail(path, lineno, "duplicate id '" + rec.id + "'");
    out.push_back(std::move(rec));
  });
  return out;
}

void write_rerank_records(const std::string& path, const std::vector<RerankRecord>& records) {
  auto out = open_out(path);
  for (const auto& rec : records) {
    json table = json::array();
    for (const auto& row : rec.table) {
      json entry{{"sample_index", row.sample_index},
                 {"backward_accuracy", row.backward_accuracy},
                 {"reward", row.reward}};
      entry["extracted_answer"] =
          row.extracted_answer ? json(*row.extracted_answer) : json();
      table.push_back(std::move(entry));
    }
    json obj{{"v", 1},
             {"primal_id", rec.primal_id},
             {"winner_index", rec.winner_index},
             {"table", std::move(table)},
             {"degraded", rec.degraded},
             {"tie_break_used", rec.tie_break_used}};
    out << obj.dump() << '\n';
  }
}

std::vector<RerankRecord> read_rerank_records(const std::string& path) {
  std::vector<RerankRecord> out;
  for_each_line(path, [&](std::size_t lineno, const json& obj) {
    check_keys(path, lineno, obj,
               {"v", "primal_id", "winner_index", "table", "degraded", "tie_break_used"});
    RerankRecord rec;
    rec.primal_id = require<std::string>(path, lineno, obj, "primal_id");
    rec.winner_index = require<int>(path, lineno, obj, "winner_index");
    rec.degraded = require<bool>(path, lineno, obj, "degraded");
    rec.tie_break_used = require<bool>(path, lineno, obj, "tie_break_used");
    if (!obj.contains("table") || !obj.at("table").is_array()) {
      fail(path, lineno, "missing table[]");
    }
    for (const auto& entry : obj.at("table")) {
      RerankTableEntry row;
      row.sample_index = entry.at("sample_index").get<int>();
      row.backward_accuracy = entry.at("backward_accuracy").get<double>();
      row.reward = entry.at("reward").get<double>();
      if (entry.contains("extracted_answer") && !entry.at("extracted_answer").is_null()) {
        row.extracted_answer = entry.at("extracted_answer").get<std::string>();
      }
      rec.table.push_back(std::move(row));
    }
    out.push_back(std::move(rec));
  });
  return out;
}

void write_mt_score_records(const std::string& path, const std::vector<MtScoreRecord>& records) {
  auto out = open_out(path);
  for (const auto& rec : records) {
    json obj{{"v", 1},
             {"id", rec.id},
             {"mean_bleu", rec.mean_bleu},
             {"reward", rec.reward},
             {"bleu_samples", rec.bleu_samples}};
    out << obj.dump() << '\n';
  }
}

}  // namespace dupo::pipeline
