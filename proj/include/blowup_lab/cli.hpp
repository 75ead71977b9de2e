#pragma once

#include <iosfwd>

namespace blowup_lab {

// blowup-lab <run|sweep|energy|report|selftest> --config <path> [--out <dir>] [--workers <n>]
// Returns 0 on success, 1 when a check fails or a run does not blow up, 2 on a
// usage or configuration error. BLOWUP_LAB_OUT overrides the configured
// output directory; --out overrides both.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blowup_lab
