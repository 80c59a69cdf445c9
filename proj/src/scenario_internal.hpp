#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "lndev/field.hpp"
#include "lndev/scenario.hpp"

namespace lndev {

// Expression compilation shared by the parser and the task runner. Both the
// scenario's coordinate names and x0..x{n-1} are accepted as variables.
Field compile_expressions(const Scenario& s, int n, const std::vector<std::string>& texts, const std::string& field);
Field compile_index_entries(const Scenario& s, int n, const std::map<std::array<int, 3>, std::string>& entries,
                            const std::string& field);

}  // namespace lndev
