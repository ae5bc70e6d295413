#pragma once

// Hand-classified Halstead / cyclomatic oracle. Every count below was made
// by walking the tokens of the snippet by hand with the classification rule
// documented in tdsearch/analysis/metrics.hpp; none was produced by the code
// under test.

namespace oracle {

struct MetricsCase {
    const char* name;
    const char* source;
    int loc;
    int cyclomatic;
    int n1, n2, N1, N2;
};

// S1: operators {=, +}; operands {a, b, c}.
inline constexpr const char* kAssignSum = "a = b + c;\n";

// S2: operators if, >, &&, >, return, return; operands f a b a 0 b 0 1 0.
inline constexpr const char* kIfAnd = "int f(int a, int b) { if (a > 0 && b > 0) { return 1; } return 0; }\n";

// S3: operands A, f; no operators.
inline constexpr const char* kEmptyMethod = "class A { public: void f() {} };\n";

// S4: operators = for = < ++ += weight return; operands
// sum n total 0 i 0 i n i total i total.
inline constexpr const char* kLoop = R"(int sum(int n) {
    int total = 0;
    for (int i = 0; i < n; ++i) {
        total += weight(i);
    }
    return total;
}
)";

// S5: operators try switch / case : case : return default : return > || == ? : catch ... return;
// operands Grader grade score score 10 10 9 'A' score 50 score 0 'B' 'C' 'F'.
inline constexpr const char* kGrader = R"(class Grader {
public:
    // letter grade
    char grade(int score) const {
        try {
            switch (score / 10) {
            case 10:
            case 9: return 'A';
            default: return score > 50 || score == 0 ? 'B' : 'C';
            }
        } catch (...) {
            return 'F';
        }
    }

};
)";

inline constexpr MetricsCase kCases[] = {
    {"assign_sum", kAssignSum, 1, 1, 2, 3, 2, 3},
    {"if_and", kIfAnd, 1, 3, 4, 5, 6, 9},
    {"empty_method", kEmptyMethod, 1, 1, 0, 2, 0, 2},
    {"loop", kLoop, 7, 2, 7, 5, 8, 12},
    {"grader", kGrader, 14, 6, 13, 11, 19, 15},
};

}  // namespace oracle
