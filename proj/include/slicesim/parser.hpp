// Textual model format.
//
//   // comment
//   r_v = 100;                                   rate definition
//   Upf_1 = (req_n4est1, r_v).Upf_2;             state definition
//   Rancp_2 = (drb_1, r_v).Rancp_1 + (notify_1, r_v).Rancp_1;
//   Upf_1[5] <req_n4est1> (Cnc_1[1] <> Up_1[2])  system line (last)
//
// Choice binds looser than prefix, `.` chains to the right, cooperation is
// left-associative and `<>` is the empty set. Parentheses group operands of
// the system line. States connected through successor references form one
// component, named after its first state with a trailing `_<digits>` removed.
#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "slicesim/model.hpp"

namespace slicesim {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string message, std::set<std::string> expected = {});

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::set<std::string>& expected() const { return expected_; }

 private:
  std::size_t line_, column_;
  std::set<std::string> expected_;
};

/// Parses a model document. Components come back desugared. Unknown rate
/// names are left for validate_model to report.
Model parse(std::string_view text);

/// Canonical text: rates sorted by name, then components in model order with
/// desugared states, then the system line.
std::string render(const Model& model);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace slicesim
