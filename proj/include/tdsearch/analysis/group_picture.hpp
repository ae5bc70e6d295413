#pragma once

#include <string>
#include <vector>

#include "tdsearch/core/types.hpp"

namespace tds {

inline constexpr double kDefaultSupportThreshold = 0.5;

struct GroupMember {
    CanonicalSignature signature;
    double support = 0.0;
    MethodSignature display;

    bool operator==(const GroupMember&) const = default;
};

/// Characteristic method set of a candidate cluster.
struct GroupPicture {
    TypeName class_name;
    std::vector<GroupMember> members;  // support desc, then name asc
    int sample_size = 0;

    bool operator==(const GroupPicture&) const = default;
};

/// Frequency-threshold clustering: keeps every canonical signature whose
/// support (fraction of candidates declaring it) is at least `threshold`.
/// Constructors are not part of the picture.
GroupPicture group_picture(const std::vector<InterfaceSpec>& candidates, double threshold, const TypeName& name);

/// Class skeleton with empty bodies, one declaration per member in order.
std::string render_skeleton(const GroupPicture& gp);

}  // namespace tds
