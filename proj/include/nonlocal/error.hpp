#pragma once

#include <stdexcept>
#include <string>

namespace nonlocal {

// Raised for violated preconditions and failed solves. Messages are meant to
// be shown to the user verbatim by the command line tool.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nonlocal
