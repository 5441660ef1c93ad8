from abc import abstractmethod
from typing import Any, Protocol, runtime_checkable

from pydantic import BaseModel, model_validator


class ResultTable(BaseModel):
    columns: list[str]
    rows: list[list[float | str]]
    metadata: dict[str, Any] = {}

    @model_validator(mode="after")
    def _check_shape(self) -> "ResultTable":
        if len(set(self.columns)) != len(self.columns):
            raise ValueError(f"column names are not unique: {self.columns}")
        for index, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row {index} has {len(row)} values for {len(self.columns)} columns"
                )
        return self

    def column(self, name: str) -> list[float | str]:
        position = self.columns.index(name)
        return [row[position] for row in self.rows]

    def last(self, name: str) -> float | str:
        return self.column(name)[-1]


@runtime_checkable
class ResultSink(Protocol):
    """
    Abstract interface for result serializers.
    Any class that implements this protocol can format scenario output.
    """

    @abstractmethod
    def render(self, table: ResultTable) -> str:
        """
        Serialize a result table.

        Args:
            table: The table to serialize

        Returns:
            The complete text to write to stdout or a file
        """
        pass
