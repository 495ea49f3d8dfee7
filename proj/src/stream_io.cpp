#include "cams/stream_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cams {

using nlohmann::json;

namespace {

json header_json(const StreamMeta& meta) {
  json h;
  h["schema"] = kStreamSchema;
  h["classes"] = meta.classes;
  h["models"] = meta.models;
  h["policies"] = meta.policies;
  h["rounds"] = meta.rounds;
  h["adversarial"] = meta.adversarial;
  if (meta.best_policy_index) h["best_policy_index"] = *meta.best_policy_index;
  if (meta.gap_delta) h["gap_delta"] = *meta.gap_delta;
  if (meta.gap_gamma) h["gap_gamma"] = *meta.gap_gamma;
  return h;
}

json record_json(const RoundRecord& rec) {
  json r;
  r["t"] = rec.round_index;
  r["predictions"] = rec.predictions;
  r["label"] = rec.true_label;
  json rows = json::array();
  for (Index i = 0; i < rec.advice.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < rec.advice.cols(); ++j) row.push_back(rec.advice.matrix()(i, j));
    rows.push_back(std::move(row));
  }
  r["advice"] = std::move(rows);
  return r;
}

template <typename T>
T field(const json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key)) throw LoadError("line " + std::to_string(line) + ": missing field '" + key + "'", line);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError("line " + std::to_string(line) + ": bad field '" + key + "': " + e.what(), line);
  }
}

StreamMeta parse_header(const std::string& text) {
  json h;
  try {
    h = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("line 1: malformed header: ") + e.what(), 1);
  }
  const auto schema = field<std::string>(h, "schema", 1);
  if (schema != kStreamSchema) {
    throw LoadError("line 1: schema version mismatch: expected " + std::string(kStreamSchema) + ", found " + schema, 1);
  }
  StreamMeta meta;
  meta.classes = field<int>(h, "classes", 1);
  meta.models = field<int>(h, "models", 1);
  meta.policies = field<int>(h, "policies", 1);
  meta.rounds = field<std::size_t>(h, "rounds", 1);
  if (h.contains("adversarial")) meta.adversarial = field<bool>(h, "adversarial", 1);
  if (h.contains("best_policy_index")) meta.best_policy_index = field<std::size_t>(h, "best_policy_index", 1);
  if (h.contains("gap_delta")) meta.gap_delta = field<double>(h, "gap_delta", 1);
  if (h.contains("gap_gamma")) meta.gap_gamma = field<double>(h, "gap_gamma", 1);
  try {
    meta.validate();
  } catch (const ValidationError& e) {
    throw LoadError(std::string("line 1: ") + e.what(), 1);
  }
  return meta;
}

RoundRecord parse_record(const std::string& text, const StreamMeta& meta, std::size_t index, std::size_t line) {
  const std::string where = "record " + std::to_string(index) + " (line " + std::to_string(line) + ")";
  json r;
  try {
    r = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(where + ": malformed record: " + e.what(), line);
  }
  RoundRecord rec;
  rec.round_index = field<std::size_t>(r, "t", line);
  if (rec.round_index != index) {
    throw LoadError(where + ": round index " + std::to_string(rec.round_index) + " out of sequence", line);
  }
  rec.predictions = field<Labels>(r, "predictions", line);
  rec.true_label = field<Label>(r, "label", line);
  const auto rows = field<std::vector<std::vector<double>>>(r, "advice", line);
  if (static_cast<int>(rec.predictions.size()) != meta.models) {
    throw LoadError(where + ": expected " + std::to_string(meta.models) + " predictions, found " +
                        std::to_string(rec.predictions.size()), line);
  }
  if (static_cast<int>(rows.size()) != meta.policies) {
    throw LoadError(where + ": expected " + std::to_string(meta.policies) + " advice rows, found " +
                        std::to_string(rows.size()), line);
  }
  Matrix advice(meta.policies, meta.models);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != meta.models) {
      throw LoadError(where + ": advice row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                          " entries, expected " + std::to_string(meta.models), line);
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) advice(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  try {
    rec.advice = meta.policies > 0 ? AdviceMatrix(std::move(advice)) : AdviceMatrix::empty(meta.models);
    rec.validate(meta.classes, meta.policies);
  } catch (const ValidationError& e) {
    throw LoadError(where + ": " + e.what(), line);
  }
  return rec;
}

}  // namespace

void write_stream(const StreamFile& stream, std::ostream& out) {
  out << header_json(stream.meta).dump() << '\n';
  for (const auto& rec : stream.records) out << record_json(rec).dump() << '\n';
}

StreamFile read_stream(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty stream file: missing header", 1);
  StreamFile stream;
  stream.meta = parse_header(line);
  stream.records.reserve(stream.meta.rounds);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t index = stream.records.size() + 1;
    if (index > stream.meta.rounds) {
      throw LoadError("line " + std::to_string(line_no) + ": more records than the declared " +
                          std::to_string(stream.meta.rounds), line_no);
    }
    stream.records.push_back(parse_record(line, stream.meta, index, line_no));
  }
  if (stream.records.size() != stream.meta.rounds) {
    const std::size_t missing = stream.records.size() + 1;
    throw LoadError("truncated stream: record " + std::to_string(missing) + " missing (file ends after " +
                        std::to_string(stream.records.size()) + " of " + std::to_string(stream.meta.rounds) +
                        " records)", line_no + 1);
  }
  return stream;
}

void save_stream(const StreamFile& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_stream(stream, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

StreamFile load_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open stream file " + path.string(), 0);
  return read_stream(in);
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec: malformed JSON: ") + e.what());
  }
  SyntheticSpec spec;
  try {
    spec.classes = j.at("classes").get<int>();
    spec.models = j.at("models").get<int>();
    spec.rounds = j.at("rounds").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.require_unique_best = j.value("require_unique_best", false);
    spec.advice_noise = j.value("advice_noise", 0.05);
    const std::string regime = j.value("regime", std::string("stochastic"));
    if (regime == "stochastic") {
      spec.regime = StreamRegime::stochastic;
    } else if (regime == "adversarial_segments") {
      spec.regime = StreamRegime::adversarial_segments;
    } else {
      throw ValidationError("spec.regime: unknown regime '" + regime + "'");
    }
    if (j.contains("accuracy")) {
      const auto& acc = j.at("accuracy");
      if (!acc.empty() && acc.front().is_array()) {
        const auto rows = acc.get<std::vector<std::vector<double>>>();
        spec.accuracy.resize(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != rows[0].size()) throw ValidationError("spec.accuracy: ragged matrix");
          for (std::size_t c = 0; c < rows[r].size(); ++c)
            spec.accuracy(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
      } else {
        const auto v = acc.get<std::vector<double>>();
        spec.accuracy.resize(static_cast<Index>(v.size()), 1);
        for (std::size_t r = 0; r < v.size(); ++r) spec.accuracy(static_cast<Index>(r), 0) = v[r];
      }
    }
    if (j.contains("label_distribution")) {
      const auto v = j.at("label_distribution").get<std::vector<double>>();
      spec.label_distribution = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }
    if (j.contains("policies")) {
      for (const auto& p : j.at("policies")) {
        PolicySpec ps;
        ps.kind = policy_kind_from_string(p.at("kind").get<std::string>());
        ps.sharpness = p.value("sharpness", 10.0);
        if (p.contains("biased_classes")) ps.biased_classes = p.at("biased_classes").get<std::vector<Label>>();
        spec.policies.push_back(std::move(ps));
      }
    }
    if (j.contains("segments")) {
      for (const auto& s : j.at("segments")) {
        spec.segments.push_back({s.at("length").get<std::size_t>(), s.at("dominant_model").get<int>()});
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace cams
