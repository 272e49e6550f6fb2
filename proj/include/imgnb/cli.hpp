#ifndef IMGNB_CLI_HPP
#define IMGNB_CLI_HPP

namespace imgnb {

/// The `imgnb` command line: run / aggregate / sweep / gen-synthetic /
/// cluster. Returns the process exit code; errors print one
/// `error: <message>` line on stderr.
int cli_main(int argc, const char* const* argv);

}  // namespace imgnb

#endif  // IMGNB_CLI_HPP
