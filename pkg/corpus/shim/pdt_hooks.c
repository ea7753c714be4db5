/* Standalone hook runtime: wall-clock timing per region visit, aggregated
 * per (region, planned thread count), written as a result file at exit.
 *
 * Configuration comes from the environment, read once at the first hook:
 *   PDTTAGGER_PLAN        path to a "pdtplan v1" file (optional)
 *   PDTTAGGER_OUT         output directory (default ".")
 *   PDTTAGGER_VIZ_OUTPUT  "TRUE" also writes the XML viz file
 *
 * Without a plan file the thread answer falls back to OMP_NUM_THREADS, or
 * an unconstrained 0 that is reported as the OpenMP runtime's own maximum
 * (a num_threads clause must receive a positive value).
 */

#define _POSIX_C_SOURCE 200809L

#include "pdt_hooks.h"

#include <pthread.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>
#include <unistd.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#define PDT_MAX_OVERRIDES 256
#define PDT_MAX_ENTRIES 512
#define PDT_MAX_DEPTH 64

struct pdt_entry {
    int region_id;
    int threads;
    long long visits;
    long long total_ns;
    long long min_ns;
    long long max_ns;
};

struct pdt_frame {
    int region_id;
    int threads;
    struct timespec start;
};

static pthread_once_t pdt_once = PTHREAD_ONCE_INIT;
static pthread_mutex_t pdt_lock = PTHREAD_MUTEX_INITIALIZER;

static struct pdt_entry pdt_table[PDT_MAX_ENTRIES];
static int pdt_table_len = 0;

static int pdt_plan_default = 0; /* 0: do not constrain */
static int pdt_override_ids[PDT_MAX_OVERRIDES];
static int pdt_override_threads[PDT_MAX_OVERRIDES];
static int pdt_override_len = 0;

static const char *pdt_out_dir = ".";
static int pdt_viz_enabled = 0;
static long long pdt_imbalances = 0;

static _Thread_local struct pdt_frame pdt_stack[PDT_MAX_DEPTH];
static _Thread_local int pdt_depth = 0;

static long long pdt_elapsed_ns(const struct timespec *a, const struct timespec *b)
{
    return (long long)(b->tv_sec - a->tv_sec) * 1000000000LL
        + (b->tv_nsec - a->tv_nsec);
}

static void pdt_load_plan(const char *path)
{
    FILE *f = fopen(path, "r");
    char tag[16], version[8];
    if (!f) {
        fprintf(stderr, "pdt_hooks: cannot open plan file %s\n", path);
        return;
    }
    if (fscanf(f, "%15s %7s %d", tag, version, &pdt_plan_default) != 3
        || strcmp(tag, "pdtplan") != 0 || strcmp(version, "v1") != 0) {
        fprintf(stderr, "pdt_hooks: malformed plan header in %s\n", path);
        pdt_plan_default = 0;
        fclose(f);
        return;
    }
    while (pdt_override_len < PDT_MAX_OVERRIDES) {
        int id, n;
        if (fscanf(f, "%d %d", &id, &n) != 2)
            break;
        pdt_override_ids[pdt_override_len] = id;
        pdt_override_threads[pdt_override_len] = n;
        pdt_override_len++;
    }
    fclose(f);
}

static int pdt_resolved_default(void)
{
    if (pdt_plan_default > 0)
        return pdt_plan_default;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

static int pdt_entry_cmp(const void *pa, const void *pb)
{
    const struct pdt_entry *a = pa, *b = pb;
    if (a->region_id != b->region_id)
        return a->region_id < b->region_id ? -1 : 1;
    if (a->threads != b->threads)
        return a->threads < b->threads ? -1 : 1;
    return 0;
}

static void pdt_write_results(void)
{
    char path[4096];
    char run_id[32];
    FILE *f;
    int i;

    pthread_mutex_lock(&pdt_lock);
    qsort(pdt_table, (size_t)pdt_table_len, sizeof(pdt_table[0]), pdt_entry_cmp);
    snprintf(run_id, sizeof run_id, "%08lx", (unsigned long)getpid());

    snprintf(path, sizeof path, "%s/pdtresult.txt", pdt_out_dir);
    f = fopen(path, "w");
    if (!f) {
        fprintf(stderr, "pdt_hooks: cannot write %s\n", path);
        pthread_mutex_unlock(&pdt_lock);
        return;
    }
    fprintf(f, "pdtresult v1 %s %d\n", run_id, pdt_resolved_default());
    for (i = 0; i < pdt_table_len; i++) {
        const struct pdt_entry *e = &pdt_table[i];
        fprintf(f, "region %d threads %d visits %lld total %.6f mean %.6f "
                   "min %.6f max %.6f\n",
                e->region_id, e->threads, e->visits,
                e->total_ns / 1e9, e->total_ns / 1e9 / (double)e->visits,
                e->min_ns / 1e9, e->max_ns / 1e9);
    }
    fclose(f);

    if (pdt_viz_enabled) {
        snprintf(path, sizeof path, "%s/pdtresult.viz", pdt_out_dir);
        f = fopen(path, "w");
        if (!f) {
            fprintf(stderr, "pdt_hooks: cannot write %s\n", path);
            pthread_mutex_unlock(&pdt_lock);
            return;
        }
        fprintf(f, "<?xml version='1.0' encoding='utf-8'?>\n");
        fprintf(f, "<pdtviz version=\"1\">\n");
        for (i = 0; i < pdt_table_len; i++) {
            const struct pdt_entry *e = &pdt_table[i];
            fprintf(f, "  <region id=\"%d\" k=\"\" file=\"\" line=\"0\" "
                       "threads=\"%d\">\n",
                    e->region_id, e->threads);
            fprintf(f, "    <time visits=\"%lld\" total=\"%.6f\" mean=\"%.6f\" "
                       "min=\"%.6f\" max=\"%.6f\" />\n",
                    e->visits, e->total_ns / 1e9,
                    e->total_ns / 1e9 / (double)e->visits,
                    e->min_ns / 1e9, e->max_ns / 1e9);
            fprintf(f, "  </region>\n");
        }
        fprintf(f, "</pdtviz>\n");
        fclose(f);
    }
    if (pdt_imbalances)
        fprintf(stderr, "pdt_hooks: %lld begin/end imbalance(s) observed\n",
                pdt_imbalances);
    pthread_mutex_unlock(&pdt_lock);
}

static void pdt_init(void)
{
    const char *plan = getenv("PDTTAGGER_PLAN");
    const char *out = getenv("PDTTAGGER_OUT");
    const char *viz = getenv("PDTTAGGER_VIZ_OUTPUT");
    const char *fallback = getenv("OMP_NUM_THREADS");

    if (out && *out)
        pdt_out_dir = strdup(out);
    if (viz && strcmp(viz, "TRUE") == 0)
        pdt_viz_enabled = 1;
    if (plan && *plan)
        pdt_load_plan(plan);
    else if (fallback && *fallback)
        pdt_plan_default = atoi(fallback);
    atexit(pdt_write_results);
}

int pdt_region_threads(int region_id)
{
    int i;
    pthread_once(&pdt_once, pdt_init);
    for (i = 0; i < pdt_override_len; i++)
        if (pdt_override_ids[i] == region_id)
            return pdt_override_threads[i];
    return pdt_resolved_default();
}

void pdt_region_begin(int region_id)
{
    struct pdt_frame *frame;
    pthread_once(&pdt_once, pdt_init);
    if (pdt_depth >= PDT_MAX_DEPTH) {
        fprintf(stderr, "pdt_hooks: nesting too deep at region %d\n", region_id);
        return;
    }
    frame = &pdt_stack[pdt_depth++];
    frame->region_id = region_id;
    frame->threads = pdt_region_threads(region_id);
    clock_gettime(CLOCK_MONOTONIC, &frame->start);
}

void pdt_region_end(int region_id)
{
    struct timespec now;
    struct pdt_frame frame;
    long long elapsed;
    int i;

    clock_gettime(CLOCK_MONOTONIC, &now);
    pthread_once(&pdt_once, pdt_init);
    if (pdt_depth == 0) {
        pthread_mutex_lock(&pdt_lock);
        pdt_imbalances++;
        pthread_mutex_unlock(&pdt_lock);
        fprintf(stderr, "pdt_hooks: end(%d) without open begin\n", region_id);
        return;
    }
    frame = pdt_stack[--pdt_depth];
    if (frame.region_id != region_id) {
        pthread_mutex_lock(&pdt_lock);
        pdt_imbalances++;
        pthread_mutex_unlock(&pdt_lock);
        fprintf(stderr, "pdt_hooks: end(%d) while region %d is open\n",
                region_id, frame.region_id);
    }
    elapsed = pdt_elapsed_ns(&frame.start, &now);
    if (elapsed < 0)
        elapsed = 0;

    pthread_mutex_lock(&pdt_lock);
    for (i = 0; i < pdt_table_len; i++)
        if (pdt_table[i].region_id == frame.region_id
            && pdt_table[i].threads == frame.threads)
            break;
    if (i == pdt_table_len) {
        if (pdt_table_len == PDT_MAX_ENTRIES) {
            pthread_mutex_unlock(&pdt_lock);
            fprintf(stderr, "pdt_hooks: aggregation table full\n");
            return;
        }
        pdt_table_len++;
        pdt_table[i].region_id = frame.region_id;
        pdt_table[i].threads = frame.threads;
        pdt_table[i].visits = 0;
        pdt_table[i].total_ns = 0;
        pdt_table[i].min_ns = elapsed;
        pdt_table[i].max_ns = elapsed;
    }
    pdt_table[i].visits++;
    pdt_table[i].total_ns += elapsed;
    if (elapsed < pdt_table[i].min_ns)
        pdt_table[i].min_ns = elapsed;
    if (elapsed > pdt_table[i].max_ns)
        pdt_table[i].max_ns = elapsed;
    pthread_mutex_unlock(&pdt_lock);
}
