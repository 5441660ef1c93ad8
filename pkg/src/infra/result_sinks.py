import csv
import io
import json

from src.ports.result_sink import ResultSink, ResultTable


def _cell(value: float | str) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


class CsvResultSink(ResultSink):
    """`# key = <json>` metadata lines, then the header row, then the data rows."""

    def render(self, table: ResultTable) -> str:
        buffer = io.StringIO()
        for key in sorted(table.metadata):
            value = json.dumps(table.metadata[key], sort_keys=True, default=str)
            buffer.write(f"# {key} = {value}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow(_cell(value) for value in row)
        return buffer.getvalue()


class JsonResultSink(ResultSink):
    def render(self, table: ResultTable) -> str:
        return table.model_dump_json(indent=2) + "\n"
