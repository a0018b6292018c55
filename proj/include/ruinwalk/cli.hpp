#pragma once

// Command-line front end: solve, finite, roots, simulate, truncate.
// Exit codes: 0 success, 1 usage error, 2 model/domain error, 3 numerical failure.

#include <ostream>
#include <string>
#include <vector>

#include "ruinwalk/pgf.hpp"

namespace ruinwalk::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Unit circle with one marker per root; multiple roots get a ring.
std::string roots_svg(const RootSet& roots, const std::string& title);

// Shortest text that reads back to the same double ("%.17g" fallback).
std::string format_double(double x);

}  // namespace ruinwalk::cli
