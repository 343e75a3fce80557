#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "flalloc/kv_document.hpp"
#include "flalloc/wireless_model.hpp"

namespace flalloc {

/// Reads a system config from a key-value document. Powers are given in dBm
/// and noise in dBm/Hz; everything else is SI. Unset keys keep the defaults.
/// Keys outside the config set are rejected unless listed in `extra_keys`.
SystemConfig config_from_document(const KvDocument& doc,
                                  const std::vector<std::string_view>& extra_keys = {});
SystemConfig load_config(const std::string& path);
/// Inverse of config_from_document. Powers go through dBm, so a reload
/// matches to rounding (about 1e-15 relative).
void write_config(std::ostream& out, const SystemConfig& config);

/// Scenario file: every config field in SI units plus one array per device
/// attribute. Floats carry 17 significant digits so a reload is exact.
void write_scenario(std::ostream& out, const Scenario& scenario);
Scenario read_scenario(std::istream& in, const std::string& source = "<scenario>");
Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& scenario);

}  // namespace flalloc
