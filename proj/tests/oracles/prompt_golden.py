"""Writes the golden prompt files from Python-literal transcriptions.

The literals below are evaluated by the Python parser (escapes, line
continuations), giving a second route to the bytes the C++ defaults encode.

Usage: python3 prompt_golden.py OUT_DIR
"""
import pathlib
import sys

SOURCE = r'''
dict_gen = "<img_placeholder>\nConvert the chart into a python dictionary `chart_dict`. Only consider the chart's data when summarizing."
dict_prefill = "```python\n chart_dict ="
dict_repair = "<img_placeholder>\nConvert the chart into a python dictionary `chart_dict`. Check json syntax errors. Only consider the chart's data when summarizing, no punctuations. Only return the valid version."
pot_system = "You are a data analyst. You are given a dictionary that represents a chart called `chart_dict`. \
You need to implement the function `get_summary_statistics(chart_dict)` that takes the dictionary as input and returns a dictionary with the relevant statistics that can be used to summarize the chart. \
Avoid sorting dictionary objects directly and USE ONLY PYTHON BUILT-IN FUNCTIONS. Name the keys of the dictionary to elaborate how it is a descriptive statistic. When writing Python, follow the PEP style guide. \
Return ONLY the code of the function that will run without any errors and can work using `eval()`."
pot_user = "Implement the function `get_summary_statistics` that takes a dictionary as input and returns a dictionary with the relevant statistics that can be used to summarize the chart using only built-in Python functions. Make sure to label the keys of the `summary_dict` to be descriptive The input dictionary is defined as {chart_dict}."
pot_prefill = "```python\ndef get_summary_statistics(chart_dict):\n    # Define output dictionary `summary_dict` to store the summary statistics\n"
summary_user = "Summarize the insights of the chart with title: '{title}'. The summary use language similar to the chart. Don't explicitly describe chart elements such as chart type. NEVER START A SENTENCE WITH A NUMBER. The chart has the dictionary: {dictionary_str} and the summary_statistics: {summary_dict}."
summary_prefill = "Let's think step by step to with as few steps as possible to summarize the chart: "
'''


def main():
    out = pathlib.Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    ns = {}
    exec(SOURCE, ns)
    for name, value in ns.items():
        if not name.startswith("__"):
            (out / f"{name}.txt").write_bytes(value.encode("utf-8"))


if __name__ == "__main__":
    main()
