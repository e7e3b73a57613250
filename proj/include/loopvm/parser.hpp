#pragma once

#include <string>

#include "loopvm/ir.hpp"

namespace loopvm {

// Parses module text. Throws SyntaxError on malformed input and
// ValidationError when the parsed module violates the IR invariants,
// so every module this returns passes validateModule cleanly.
Module parseModule(const std::string& text);

} // namespace loopvm
