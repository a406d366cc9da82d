"""
Annotation time per label
=========================

Two annotators labelled 50 regions each with three tools. Totals in seconds
are converted to seconds per label, averaged across annotators, and the gaze
tool's savings are expressed relative to the other two.
"""

from gazelabel.timing import REFERENCE_STUDY, TimingRecord, timing_report

report = timing_report(REFERENCE_STUDY)
print("method     A       B       average  pooled")
for method in ("freehand", "bbox", "gaze"):
    a, b = report.per_annotator[method]["A"], report.per_annotator[method]["B"]
    print(f"{method:9s}{a:6.2f}  {b:6.2f}  {report.average[method]:8.2f}  {report.pooled[method]:6.2f}")
for other, saving in report.savings.items():
    print(f"gaze saves {100 * saving:.1f}% per label vs {other}")

# The mean of per-annotator averages differs from the pooled figure as soon
# as annotators label different numbers of objects.
uneven = [TimingRecord("A", "gaze", 100, 10), TimingRecord("B", "gaze", 100, 40)]
r = timing_report(uneven)
print(f"\nuneven counts: mean of averages {r.average['gaze']:.2f} s, pooled {r.pooled['gaze']:.2f} s")
