#pragma once

#include <string>
#include <vector>

namespace bhct {

struct SelftestOptions {
    int n_s = 2048;            // detector samples for the singularity fits
    double fbp_scale_error = 0.0;  // relative perturbation of the FBP constant (fault injection)
};

enum class CheckStatus { Pass, Fail, Skipped };

struct CheckRow {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    CheckStatus status = CheckStatus::Pass;
    std::string note;
};

std::vector<CheckRow> run_selftest(const SelftestOptions& opts = {});
std::string format_table(const std::vector<CheckRow>& rows);
bool all_passed(const std::vector<CheckRow>& rows);  // skipped rows do not fail

}  // namespace bhct
