#pragma once

// Base torque profile CSV `time_s,torque_nm`, and the per-class scaled
// profiles `time_s,light_nm,medium_nm,heavy_nm`.

#include <string>

#include "exo/control.hpp"
#include "exo/io/text.hpp"

namespace exo::io {

inline control::TorqueProfile parse_torque_csv(std::string_view text, const std::string& source)
{
    const CsvTable t = parse_csv(text, source);
    require(t.header.size() == 2 && t.header[0] == "time_s" && t.header[1] == "torque_nm", ErrorKind::Schema,
            source + ": header must be time_s,torque_nm");
    require(!t.rows.empty(), ErrorKind::InsufficientData, source + ": no samples");
    control::TorqueProfile p;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto loc = where(source, t.line_numbers[r]);
        const double time = parse_double(t.rows[r][0], loc);
        require(p.time_s.empty() || time > p.time_s.back(), ErrorKind::Schema, loc + ": time must increase");
        p.time_s.push_back(time);
        p.torque_nm.push_back(parse_double(t.rows[r][1], loc));
    }
    return p;
}

inline std::string torque_profiles_csv(const control::TorqueProfile& base, const control::KpylRange& r)
{
    std::array<control::TorqueProfile, 3> scaled;
    for (auto c : payload::kAllClasses)
        scaled[payload::index_of(c)] = control::scaled_profile(base, control::k_for_class(r, c), r);
    std::string out = "time_s,light_nm,medium_nm,heavy_nm\n";
    for (std::size_t i = 0; i < base.time_s.size(); ++i) {
        out += fmt_fixed(base.time_s[i], 6);
        for (const auto& s : scaled) out += "," + fmt_fixed(s.torque_nm[i], 6);
        out += '\n';
    }
    return out;
}

} // namespace exo::io
