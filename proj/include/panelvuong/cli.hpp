#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace panelvuong {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDegenerate = 2;

// Entry point of the command-line tool. args excludes the program name.
//   test classic --input F --model2 FAMILY:GROUPCOL [--model1 ..] [--level p]
//   test twfe    --input F --group-col COL [--level p]
//   simulate     --kind K --reps R [--n --T --G --kappa list --c list --seed --levels list --out-dir D]
// Returns 0 on a completed run, 2 on a degenerate comparison, 1 on error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace panelvuong
