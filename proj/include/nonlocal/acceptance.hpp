#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace nonlocal {

struct CriterionResult
{
    std::string id;
    std::string title;
    bool pass = false;
    std::string detail;
};

struct Criterion
{
    std::string id;
    std::string title;
    std::function<CriterionResult()> run;
};

std::vector<Criterion> acceptance_criteria();

// Runs every criterion (or those whose id is listed), printing one
// "PASS|FAIL <id> <title>: <detail>" line each to `out`.
std::vector<CriterionResult> run_acceptance(std::ostream& out, const std::vector<std::string>& only = {});

}  // namespace nonlocal
