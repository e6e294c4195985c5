#pragma once

#include <stdexcept>
#include <string>

namespace roomgraph {

enum class Errc {
  invalid_argument,
  io,
  missing_file,
  header,
  truncated,
  unsupported_layout,
  spec_mismatch,
  out_of_range,
  degenerate,
  unreachable,
  schema,
  version,
  backend,
};

const char* to_string(Errc code);

/// Library-wide exception. The code lets callers branch on the failure class
/// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace roomgraph
