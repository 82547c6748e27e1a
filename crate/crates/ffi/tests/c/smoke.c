#include <math.h>
#include <stdio.h>
#include <string.h>

#include "blink_tweezer.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        BtStatus st_ = (expr);                                             \
        if (st_ != BT_STATUS_OK) {                                         \
            fprintf(stderr, "%s -> %d: %s\n", #expr, (int)st_,             \
                    bt_last_error_message());                              \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    const double w = 2.0 * M_PI * 64e3;
    double t_on = 0.0;
    CHECK(bt_resonant_ton_np1(w, 10e-6, 0, &t_on));
    if (fabs(t_on * 1e6 - 1.147738) > 1e-6) {
        fprintf(stderr, "t_on = %g\n", t_on);
        return 1;
    }

    double a, b;
    if (bt_resonant_ton_np2(1.0, 1.0, &a, &b) != BT_STATUS_SINGULAR) return 1;
    if (strlen(bt_last_error_message()) == 0) return 1;
    if (bt_max_atoms(1e-6, 10e-6, NULL) != BT_STATUS_NULL_POINTER) return 1;

    BtMap m, p;
    CHECK(bt_cycle_map(w, 1e-6, 10e-6, &m));
    CHECK(bt_map_multiply(m, m, &p));
    if (fabs(p.a * p.d - p.b * p.c - 1.0) > 1e-9) return 1;

    char *json = NULL;
    CHECK(bt_builtin_scenario_json("worm", 20e-6, &json));
    BtSchedule *sched = NULL;
    CHECK(bt_schedule_compile(json, 1.1e-6, 10e-6, 0, 0, 0.13, &sched));
    bt_string_free(json);
    uint32_t cycles = 0;
    size_t violations = 99;
    CHECK(bt_schedule_cycle_count(sched, &cycles));
    CHECK(bt_schedule_validate(sched, 0.13, 7.5e-6, 1e-6, &violations));
    bt_schedule_free(sched);
    if (cycles == 0 || violations != 0) return 1;

    printf("ok %s\n", bt_version());
    return 0;
}
