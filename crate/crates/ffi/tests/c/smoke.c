#include <stdio.h>
#include <string.h>
#include "cdsentry.h"

static const char *SRC =
    "contract C {\n"
    "    address owner;\n"
    "    constructor() { owner = msg.sender; }\n"
    "    function close() public {\n"
    "        require(msg.sender == owner);\n"
    "        selfdestruct(payable(owner));\n"
    "    }\n"
    "}\n";

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (%s)\n", #cond, cds_last_error_message()); return 1; } } while (0)

int main(void) {
    CdsScanner *s = cds_scanner_new();
    CHECK(s != NULL);
    CHECK(cds_scanner_set_rules(s, "SS,MFS") == CDS_STATUS_OK);
    CHECK(cds_scanner_set_rules(s, "nope") == CDS_STATUS_INVALID_ARGUMENT);
    CHECK(strlen(cds_last_error_message()) > 0);

    CdsReport *r = NULL;
    CHECK(cds_scan_source(s, "c.sol", SRC, &r) == CDS_STATUS_OK);
    bool has = false;
    CHECK(cds_report_has_defect(r, "SS", &has) == CDS_STATUS_OK && has);
    CHECK(cds_report_has_defect(r, "MFS", &has) == CDS_STATUS_OK && !has);
    CHECK(cds_report_finding_count(r) == 1);

    char *json = NULL;
    CHECK(cds_report_to_json(r, &json) == CDS_STATUS_OK);
    CHECK(strstr(json, "\"SS\"") != NULL);
    cds_string_free(json);
    cds_report_free(r);

    CHECK(cds_scan_source(s, NULL, "contract {", &r) == CDS_STATUS_PARSE_ERROR);
    CHECK(r != NULL);
    cds_report_free(r);
    CHECK(cds_scan_source(NULL, NULL, SRC, &r) == CDS_STATUS_NULL_ARGUMENT && r == NULL);

    cds_scanner_free(s);
    puts("ok");
    return 0;
}
