#include "noisegrid/types.hpp"

namespace noisegrid {

Level level_from_db(double db) {
    if (!std::isfinite(db)) {
        throw InvalidInput("level_from_db: non-finite input");
    }
    // llround rounds halfway cases away from zero.
    long long mdb = std::llround(db * 1000.0);
    if (mdb < INT32_MIN || mdb > INT32_MAX) {
        throw InvalidInput("level_from_db: out of representable range");
    }
    return Level{static_cast<int32_t>(mdb)};
}

double distance_m(const GeoPoint& a, const GeoPoint& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

bool is_construction(SourceClass c) {
    switch (c) {
        case SourceClass::Jackhammer:
        case SourceClass::CompressorEngine:
        case SourceClass::MetallicBanging:
            return true;
        default:
            return false;
    }
}

const char* to_string(SourceClass c) {
    switch (c) {
        case SourceClass::Jackhammer: return "Jackhammer";
        case SourceClass::CompressorEngine: return "CompressorEngine";
        case SourceClass::MetallicBanging: return "MetallicBanging";
        case SourceClass::Siren: return "Siren";
        case SourceClass::Traffic: return "Traffic";
        case SourceClass::Music: return "Music";
        case SourceClass::Crowd: return "Crowd";
        case SourceClass::Ambient: return "Ambient";
    }
    return "Ambient";
}

SourceClass source_class_from_string(const std::string& s) {
    for (int i = 0; i < kSourceClassCount; ++i) {
        auto c = static_cast<SourceClass>(i);
        if (s == to_string(c)) return c;
    }
    throw InvalidInput("unknown source class: " + s);
}

const char* to_string(ComplaintCategory c) {
    switch (c) {
        case ComplaintCategory::AfterHoursConstruction: return "AfterHoursConstruction";
        case ComplaintCategory::Construction: return "Construction";
        case ComplaintCategory::Jackhammer: return "Jackhammer";
        case ComplaintCategory::AlarmSignal: return "AlarmSignal";
        case ComplaintCategory::Traffic: return "Traffic";
        case ComplaintCategory::Other: return "Other";
    }
    return "Other";
}

const char* to_string(ComplaintRoute r) {
    return r == ComplaintRoute::DEP ? "DEP" : "Other";
}

const char* to_string(Resolution r) {
    switch (r) {
        case Resolution::ViolationNotObserved: return "ViolationNotObserved";
        case Resolution::ViolationIssued: return "ViolationIssued";
        case Resolution::Other: return "Other";
    }
    return "Other";
}

ComplaintCategory complaint_category_from_string(const std::string& s, bool* known) {
    for (int i = 0; i < kComplaintCategoryCount; ++i) {
        auto c = static_cast<ComplaintCategory>(i);
        if (s == to_string(c)) {
            if (known) *known = true;
            return c;
        }
    }
    if (known) *known = false;
    return ComplaintCategory::Other;
}

ComplaintRoute complaint_route_from_string(const std::string& s, bool* known) {
    if (s == "DEP") {
        if (known) *known = true;
        return ComplaintRoute::DEP;
    }
    if (known) *known = (s == "Other");
    return ComplaintRoute::Other;
}

Resolution resolution_from_string(const std::string& s, bool* known) {
    for (int i = 0; i < kResolutionCount; ++i) {
        auto r = static_cast<Resolution>(i);
        if (s == to_string(r)) {
            if (known) *known = true;
            return r;
        }
    }
    if (known) *known = false;
    return Resolution::Other;
}

}  // namespace noisegrid
