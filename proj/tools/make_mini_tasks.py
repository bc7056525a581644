"""Writes task.json and transcript.jsonl for every versa-mini task."""
import json
from pathlib import Path

UNITTEST = "(cd repo && set -o pipefail && python3 -m unittest -q 2>&1 | sed -E 's/ in [0-9.]+s$//')"
ROOT = Path(__file__).resolve().parent.parent / "benchmarks" / "versa-mini" / "tasks"


def call(tool, thought, **args):
    return {"response": {"thought": thought, "tool_call": {"tool": tool, "arguments": args}}}


def browse(thought, **args):
    return call("browse", thought, **args)


def finish(message, thought=None):
    r = {"finish": message}
    if thought:
        r["thought"] = thought
    return {"response": r}


def cp(cid, description, validator, points=1):
    return {"id": cid, "description": description, "points": points, "validator": validator}


TASKS = []


def task(task_id, category, instruction, checkpoints, transcript, answer_key=None, files=False):
    TASKS.append((task_id, category, instruction, checkpoints, transcript, answer_key, files))


task("browse-teapot-price", "browsing",
     "Open http://shop.test/index.html, find the price of the Blue Teapot, and write just the number "
     "(for example 12.50) to price.txt in the working directory.",
     [cp("visited-product", "The Blue Teapot product page was opened",
         {"type": "url_visited", "url": "http://shop.test/teapot-blue.html"}),
      cp("price-file", "price.txt holds the Blue Teapot price",
         {"type": "file_contains", "path": "price.txt", "text": "24.90"}, 2)],
     [browse("Open the shop front page.", action="goto", url="http://shop.test/index.html"),
      browse("The Blue Teapot link is a1.", action="click", bid="a1"),
      call("execute_bash", "The price is $24.90; save it.", command="echo 24.90 > price.txt"),
      finish("Wrote the Blue Teapot price, 24.90, to price.txt.")])

task("browse-catalog-search", "browsing",
     "Use the catalog search at http://shop.test/search.html to look for 'mug' with results sorted by price. "
     "How many products are found? Answer with a number.",
     [cp("submitted", "The search form was submitted with the right query and sort order",
         {"type": "url_visited", "url": "http://shop.test/results.html?q=mug&sort=price", "match": "prefix"}),
      cp("answer", "The reported count is correct", {"type": "answer_equals"})],
     [browse("Open the search page.", action="goto", url="http://shop.test/search.html"),
      browse("Type the query into the Product name box.", action="fill", bid="a0", text="mug"),
      browse("Sort by price.", action="select_option", bid="a1", value="price"),
      browse("Submit the form.", action="click", bid="a2"),
      finish("The search for mug sorted by price found 3 products."),
      finish("3")],
     answer_key="3")

task("browse-download-prices", "browsing",
     "Download the Q2 price list from http://shop.test/downloads.html into the working directory.",
     [cp("downloaded", "The Q2 CSV was downloaded",
         {"type": "file_exists", "path": "downloads/q2-prices.csv"}),
      cp("content", "The downloaded file has the Q2 prices",
         {"type": "file_contains", "path": "downloads/q2-prices.csv", "text": "Blue Teapot,24.90"})],
     [browse("Open the price list page.", action="goto", url="http://shop.test/downloads.html"),
      browse("Click the Q2 CSV link.", action="click", bid="a1"),
      call("execute_bash", "Check the download.", command="head -3 downloads/q2-prices.csv"),
      finish("Downloaded the Q2 price list to downloads/q2-prices.csv.")])

task("code-fix-add", "code",
     "The tests in repo/ fail. Fix the bug in repo/calc.py so that `python3 -m unittest` passes inside repo/.",
     [cp("fixed-source", "add() returns the sum",
         {"type": "file_contains", "path": "repo/calc.py", "text": "return a + b"}),
      cp("tests-pass", "The unit tests pass",
         {"type": "shell_probe", "command": "cd repo && python3 -m unittest -q", "expect_exit": 0}, 2)],
     [call("str_replace_editor", "Look at the implementation first.", command="view", path="repo/calc.py"),
      call("str_replace_editor", "add() subtracts; fix it.", command="str_replace", path="repo/calc.py",
           old_str="return a - b", new_str="return a + b"),
      call("execute_bash", "Run the tests.", command=UNITTEST),
      finish("Fixed add() in repo/calc.py; the tests pass.")],
     files=True)

task("code-fix-slug", "code",
     "slugify() in repo/text_utils.py should produce lowercase slugs. Fix it so the tests in repo/ pass, "
     "without editing the tests.",
     [cp("tests-pass", "The unit tests pass",
         {"type": "shell_probe", "command": "cd repo && python3 -m unittest -q", "expect_exit": 0}, 2),
      cp("tests-intact", "The tests were not weakened",
         {"type": "shell_probe", "command": "grep -c assertEqual repo/test_text_utils.py", "stdout_contains": "2"})],
     [call("execute_bash", "Reproduce the failure.", command=UNITTEST),
      call("str_replace_editor", "Inspect slugify.", command="view", path="repo/text_utils.py"),
      call("str_replace_editor", "Lowercase each word.", command="str_replace", path="repo/text_utils.py",
           old_str='return "-".join(words)', new_str='return "-".join(w.lower() for w in words)'),
      call("execute_bash", "Run the tests again.", command=UNITTEST),
      finish("slugify() now lowercases words; all tests pass.")],
     files=True)

task("code-fix-mean", "code",
     "mean() in repo/stats.py returns wrong values. Investigate and fix it so the tests in repo/ pass.",
     [cp("fixed-source", "mean() divides by the number of values",
         {"type": "file_contains", "path": "repo/stats.py", "text": "/ len(values)"}),
      cp("tests-pass", "The unit tests pass",
         {"type": "shell_probe", "command": "cd repo && python3 -m unittest -q", "expect_exit": 0}, 2)],
     [call("execute_code", "Try the function directly.",
           code="import sys\nsys.path.insert(0, 'repo')\nfrom stats import mean\nmean([2, 4, 6])"),
      call("str_replace_editor", "It divides by n - 1; use n.", command="str_replace", path="repo/stats.py",
           old_str="(len(values) - 1)", new_str="len(values)"),
      call("execute_bash", "Run the tests.", command=UNITTEST),
      finish("mean() divided by n - 1; it now divides by n and the tests pass.")],
     files=True)

task("search-capital", "search",
     "What is the capital city of Australia? Answer with the city name only.",
     [cp("answer", "The answer names the capital", {"type": "answer_equals"})],
     [call("search_web", "Look it up.", query="capital of australia"),
      finish("According to the search results, Canberra is the capital of Australia."),
      finish("Canberra")],
     answer_key="Canberra")

task("search-observatory-year", "search",
     "In which year did the Greenfield Observatory open? Answer with the year only.",
     [cp("answer", "The opening year is correct", {"type": "answer_equals"})],
     [call("search_web", "Search for the observatory's history.", query="greenfield observatory founded"),
      finish("The history page says the Greenfield Observatory opened in 1,887."),
      finish("1,887")],
     answer_key="1887")

task("file-pdf-audit", "file",
     "According to audit.pdf in the working directory, how many invoices were audited? "
     "Write the number in words.",
     [cp("answer", "The number of audited invoices, in words", {"type": "answer_equals"})],
     [call("str_replace_editor", "Read the PDF.", command="view", path="audit.pdf"),
      finish("The audit summary lists 500 invoices audited."),
      finish("five hundred")],
     answer_key="five hundred", files=True)

task("file-xlsx-total", "file",
     "inventory.xlsx has an Inventory sheet. Compute the total count over all items and write it to total.txt.",
     [cp("total", "total.txt holds the item total",
         {"type": "file_contains", "path": "total.txt", "text": "43"})],
     [call("str_replace_editor", "Read the workbook.", command="view", path="inventory.xlsx"),
      call("execute_code", "Sum the Inventory counts and save the result.",
           code="total = sum([7, 25, 11])\nwith open('total.txt', 'w') as f:\n    f.write(str(total))\ntotal"),
      finish("The Inventory sheet totals 43 items; written to total.txt.")],
     files=True)

task("mixed-search-browse-write", "mixed",
     "Find the city where the Harbor Tea Company has its headquarters and write the city name to hq.txt.",
     [cp("visited-wiki", "The company page was opened",
         {"type": "url_visited", "url": "http://wiki.test/harbor-tea.html"}),
      cp("hq-file", "hq.txt names the headquarters city",
         {"type": "file_contains", "path": "hq.txt", "text": "Lisbon"}, 2)],
     [call("search_web", "Search for the company.", query="harbor tea company headquarters"),
      browse("Open the wiki result.", action="goto", url="http://wiki.test/harbor-tea.html"),
      call("execute_bash", "Headquarters: Lisbon, Portugal.", command="echo Lisbon > hq.txt"),
      finish("The Harbor Tea Company is headquartered in Lisbon; written to hq.txt.")])

task("mixed-file-code-edit", "mixed",
     "Set max_value in alerts.ini to the largest value in readings.csv. check.py verifies the result.",
     [cp("config", "alerts.ini has the peak reading",
         {"type": "file_contains", "path": "alerts.ini", "text": "max_value = 42"}),
      cp("check", "check.py accepts the configuration",
         {"type": "shell_probe", "command": "python3 check.py", "stdout_contains": "config ok"})],
     [call("str_replace_editor", "Look at the readings.", command="view", path="readings.csv"),
      call("execute_code", "Compute the peak.",
           code="import csv\nwith open('readings.csv') as f:\n    peak = max(int(r['value']) for r in csv.DictReader(f))\npeak"),
      call("str_replace_editor", "Update the config.", command="str_replace", path="alerts.ini",
           old_str="max_value = 0", new_str="max_value = 42"),
      call("execute_bash", "Verify.", command="python3 check.py"),
      finish("Set max_value = 42 in alerts.ini; check.py passes.")],
     files=True)

for task_id, category, instruction, checkpoints, transcript, answer_key, files in TASKS:
    d = ROOT / task_id
    d.mkdir(parents=True, exist_ok=True)
    manifest = {"task_id": task_id, "category": category, "instruction": instruction,
                "fixtures": {"transcript": "transcript.jsonl"}, "checkpoints": checkpoints, "step_cap": 20}
    if files:
        manifest["fixtures"]["files"] = "files"
    if answer_key is not None:
        manifest["answer_key"] = answer_key
    (d / "task.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (d / "transcript.jsonl").write_text("".join(json.dumps(e, sort_keys=True) + "\n" for e in transcript))
print(len(TASKS))
