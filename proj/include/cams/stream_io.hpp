#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "cams/datagen.hpp"

namespace cams {

inline constexpr std::string_view kStreamSchema = "cams-stream/1";

// Failure to read a stream file; `line` is 1-based (0 when not tied to a line).
class LoadError : public ValidationError {
 public:
  LoadError(const std::string& what, std::size_t line) : ValidationError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Stream files are JSON Lines:
//   line 1: {"schema":"cams-stream/1","classes":c,"models":k,"policies":n,
//            "rounds":T,"adversarial":bool,"best_policy_index":i?,
//            "gap_delta":d?,"gap_gamma":g?}
//   line t+1: {"t":t,"predictions":[...k],"label":y,"advice":[[...k] x n]}
// Reals are written in shortest round-trip form.
void write_stream(const StreamFile& stream, std::ostream& out);
StreamFile read_stream(std::istream& in);

void save_stream(const StreamFile& stream, const std::filesystem::path& path);
StreamFile load_stream(const std::filesystem::path& path);

// Generator spec files (JSON). Keys mirror SyntheticSpec; "accuracy" is
// either a k-vector or a k x c matrix, "regime" is "stochastic" or
// "adversarial_segments", "segments" is [{"length":L,"dominant_model":j}].
SyntheticSpec parse_synthetic_spec(std::string_view json_text);

}  // namespace cams
