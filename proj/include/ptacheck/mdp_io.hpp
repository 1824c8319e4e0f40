#pragma once

#include "ptacheck/prob_system.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace ptacheck {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Text interchange format:
///
///   STATES <n> INIT <i>
///   FLAGS decorated            (optional)
///   TARGETS <k> <t1> ... <tk>  (optional)
///   S <idx> [<canonical name>]
///   A <action>
///   <target> <num>/<den>
///   ...
///   SHA256 <hex of every byte above this line>
std::string write_ps(const ProbSystem& ps);
void write_ps(const ProbSystem& ps, std::ostream& out);
void write_ps_file(const ProbSystem& ps, const std::filesystem::path& path);

ProbSystem read_ps(std::string_view text);
ProbSystem read_ps(std::istream& in);
ProbSystem read_ps_file(const std::filesystem::path& path);

} // namespace ptacheck
