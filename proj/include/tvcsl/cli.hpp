#pragma once

#include <string>
#include <vector>

namespace tvcsl {

// Entry point shared by the binary and in-process tests. args excludes the
// program name. Returns the process exit code: 0 success, 1 runtime failure,
// 2 usage error.
int cli_main(const std::vector<std::string>& args);

}  // namespace tvcsl
