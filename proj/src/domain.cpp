#include "schoolopt/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace schoolopt {

namespace {

constexpr std::string_view kCanonicalCsv =
    "id,name,grade,enrollment,current_start_minutes\n"
    "1,Muir (John) PK,PK,242,570\n"
    "2,Ortega (Jose) PK,PK,399,560\n"
    "3,McCoppin (Frank) PK,PK,225,560\n"
    "4,Transition Training Center (Access),HS,5,480\n"
    "5,Balboa HS,HS,1226,495\n"
    "6,Galileo HS,HS,1851,480\n"
    "7,Everett MS,MS,709,480\n"
    "8,Lick (James) MS,MS,466,510\n"
    "9,Cobb (Dr William L) ES,ES,136,520\n"
    "10,Lawton K-8 (K-5),K8,598,570\n";

std::string normalize(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (*end != '\0') return false;
    out = static_cast<int>(v);
    return true;
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string_view to_string(GradeLevel g) {
    switch (g) {
        case GradeLevel::PK: return "PK";
        case GradeLevel::ES: return "ES";
        case GradeLevel::MS: return "MS";
        case GradeLevel::K8: return "K8";
        case GradeLevel::HS: return "HS";
    }
    return "?";
}

GradeLevel parse_grade_level(std::string_view s) {
    for (auto g : {GradeLevel::PK, GradeLevel::ES, GradeLevel::MS, GradeLevel::K8, GradeLevel::HS}) {
        if (s == to_string(g)) return g;
    }
    throw ValidationError("unknown grade level '" + std::string(s) + "'");
}

std::string format_clock(int minutes) {
    const int h24 = minutes / 60;
    const int m = minutes % 60;
    const bool pm = h24 >= 12;
    int h12 = h24 % 12;
    if (h12 == 0) h12 = 12;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%d:%02d %s", h12, m, pm ? "PM" : "AM");
    return buf;
}

std::vector<TimeSlot> standard_slots() {
    std::vector<TimeSlot> slots;
    int index = 1;
    for (int m : {470, 520, 570}) slots.push_back({index++, m, format_clock(m)});
    return slots;
}

SchoolData::SchoolData(std::vector<SchoolRecord> schools, std::vector<TimeSlot> slots)
    : schools_(std::move(schools)), slots_(std::move(slots)) {
    if (schools_.empty()) throw ValidationError("no records");
    if (slots_.empty()) throw ValidationError("no time slots");
    for (std::size_t i = 0; i < schools_.size(); ++i) {
        if (schools_[i].id != static_cast<int>(i + 1)) {
            throw ValidationError("school ids must be contiguous from 1; found " +
                                  std::to_string(schools_[i].id) + " at position " + std::to_string(i + 1));
        }
    }
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].index != static_cast<int>(i + 1) || (i > 0 && slots_[i].minutes <= slots_[i - 1].minutes)) {
            throw ValidationError("time slots must be indexed from 1 and strictly increasing");
        }
    }
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& s : schools_) {
        h = fnv1a(h, std::to_string(s.id) + '|' + s.name + '|' + std::string(to_string(s.grade_level)) + '|' +
                         std::to_string(s.enrollment) + '|' + std::to_string(s.current_start) + '\n');
    }
    for (const auto& t : slots_) h = fnv1a(h, std::to_string(t.minutes) + '|' + t.label + '\n');
    fingerprint_ = h;
}

int SchoolData::total_enrollment() const noexcept {
    int total = 0;
    for (const auto& s : schools_) total += s.enrollment;
    return total;
}

int SchoolData::find_school(std::string_view name) const {
    const std::string key = normalize(name);
    for (const auto& s : schools_) {
        if (normalize(s.name) == key) return s.id;
    }
    return 0;
}

int SchoolData::find_slot(std::string_view label) const {
    const std::string key = normalize(label);
    for (const auto& t : slots_) {
        if (normalize(t.label) == key) return t.index;
    }
    return 0;
}

std::string_view canonical_csv() { return kCanonicalCsv; }

const SchoolData& canonical_data() {
    static const SchoolData data = [] {
        std::istringstream in{std::string(kCanonicalCsv)};
        return SchoolData(load_school_data(in), standard_slots());
    }();
    return data;
}

std::vector<SchoolRecord> load_school_data(std::istream& source) {
    std::vector<SchoolRecord> records;
    std::string line;
    int row = 0;
    bool header_seen = false;
    while (std::getline(source, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("id,", 0) == 0) continue;
        }
        const auto fields = split_csv_line(line);
        const std::string where = "row " + std::to_string(row);
        if (fields.size() != 5) {
            throw ValidationError(where + ": expected 5 fields, got " + std::to_string(fields.size()));
        }
        SchoolRecord rec;
        if (!parse_int(fields[0], rec.id)) throw ValidationError(where + ": bad id '" + fields[0] + "'");
        rec.name = fields[1];
        if (rec.name.empty()) throw ValidationError(where + ": empty name");
        try {
            rec.grade_level = parse_grade_level(fields[2]);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (!parse_int(fields[3], rec.enrollment)) {
            throw ValidationError(where + ": bad enrollment '" + fields[3] + "'");
        }
        if (rec.enrollment < 0) throw ValidationError(where + ": enrollment must be non-negative");
        if (!parse_int(fields[4], rec.current_start) || rec.current_start < 0 || rec.current_start >= 1440) {
            throw ValidationError(where + ": bad current_start_minutes '" + fields[4] + "'");
        }
        for (const auto& r : records) {
            if (r.id == rec.id) throw ValidationError(where + ": duplicate id " + std::to_string(rec.id));
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw ValidationError("no records");
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].id != static_cast<int>(i + 1)) {
            throw ValidationError("ids must be contiguous 1.." + std::to_string(records.size()) + "; missing " +
                                  std::to_string(i + 1));
        }
    }
    return records;
}

SchoolData load_school_data_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open school data file '" + path + "'");
    return SchoolData(load_school_data(in), standard_slots());
}

void validate_schedule(const Schedule& s, const SchoolData& data) {
    if (s.slots.size() != data.num_schools()) {
        throw std::invalid_argument("schedule covers " + std::to_string(s.slots.size()) + " schools, expected " +
                                    std::to_string(data.num_schools()));
    }
    for (std::size_t q = 0; q < s.slots.size(); ++q) {
        if (s.slots[q] < 1 || s.slots[q] > data.num_slots()) {
            throw std::invalid_argument("school " + std::to_string(q + 1) + " has no valid slot");
        }
    }
}

ScheduleFeatures compute_features(const Schedule& s, const SchoolData& data) {
    validate_schedule(s, data);
    ScheduleFeatures f;
    f.num_schools = data.num_schools();
    f.per_school_change.resize(data.num_schools());
    f.slot_loads.assign(data.num_slots(), 0);
    for (const auto& school : data.schools()) {
        const int slot = s.slot_of(school.id);
        const int change = std::abs(data.slot(slot).minutes - school.current_start);
        f.per_school_change[static_cast<std::size_t>(school.id - 1)] = change;
        f.deviation_sum += change;
        f.slot_loads[static_cast<std::size_t>(slot - 1)] += school.enrollment;
    }
    f.peak_load = *std::max_element(f.slot_loads.begin(), f.slot_loads.end());
    return f;
}

ScheduleSpace::ScheduleSpace(std::vector<std::vector<std::uint8_t>> allowed, const SchoolData& data)
    : allowed_(std::move(allowed)) {
    if (allowed_.size() != data.num_schools()) {
        throw std::invalid_argument("allowed-slot table must cover every school");
    }
    for (std::size_t q = 0; q < allowed_.size(); ++q) {
        auto& a = allowed_[q];
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
        if (a.empty()) {
            const auto& school = data.school(static_cast<int>(q + 1));
            throw InfeasibleSpaceError(school.id, "no admissible start time left for " + school.name);
        }
        for (auto t : a) {
            if (t < 1 || t > data.num_slots()) throw std::invalid_argument("slot index out of range");
        }
    }
    stride_.assign(allowed_.size(), 1);
    for (std::size_t i = allowed_.size(); i-- > 0;) {
        stride_[i] = size_;
        size_ *= allowed_[i].size();
    }
}

ScheduleSpace ScheduleSpace::full(const SchoolData& data) {
    std::vector<std::uint8_t> all;
    for (const auto& t : data.slots()) all.push_back(static_cast<std::uint8_t>(t.index));
    return ScheduleSpace(std::vector<std::vector<std::uint8_t>>(data.num_schools(), all), data);
}

ScheduleSpace ScheduleSpace::from_fixes(const std::map<int, std::set<int>>& fixes, const SchoolData& data) {
    std::vector<std::uint8_t> all;
    for (const auto& t : data.slots()) all.push_back(static_cast<std::uint8_t>(t.index));
    std::vector<std::vector<std::uint8_t>> allowed(data.num_schools(), all);
    for (const auto& [school, slots] : fixes) {
        if (school < 1 || school > static_cast<int>(data.num_schools())) {
            throw std::invalid_argument("unknown school id " + std::to_string(school));
        }
        auto& a = allowed[static_cast<std::size_t>(school - 1)];
        a.assign(slots.begin(), slots.end());
    }
    return ScheduleSpace(std::move(allowed), data);
}

void ScheduleSpace::decode(std::uint64_t index, std::uint8_t* out) const {
    for (std::size_t q = 0; q < allowed_.size(); ++q) {
        const std::uint64_t digit = index / stride_[q];
        index -= digit * stride_[q];
        out[q] = allowed_[q][digit];
    }
}

Schedule ScheduleSpace::at(std::uint64_t index) const {
    if (index >= size_) throw std::out_of_range("schedule index out of range");
    Schedule s;
    s.slots.resize(allowed_.size());
    decode(index, s.slots.data());
    return s;
}

void enumerate_schedules(const ScheduleSpace& space, const std::function<void(const Schedule&)>& visit) {
    Schedule s;
    s.slots.resize(space.num_schools());
    for (std::uint64_t i = 0; i < space.size(); ++i) {
        space.decode(i, s.slots.data());
        visit(s);
    }
}

void enumerate_schedules(const std::map<int, std::set<int>>& fixes, const SchoolData& data,
                         const std::function<void(const Schedule&)>& visit) {
    enumerate_schedules(ScheduleSpace::from_fixes(fixes, data), visit);
}

}  // namespace schoolopt
