#pragma once

namespace chaoslink {

// Exit codes of cli_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

int cli_main(int argc, const char *const *argv);

} // namespace chaoslink
