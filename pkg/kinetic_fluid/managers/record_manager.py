"""Storage and retrieval of diagnostics and Picard rows."""

from typing import Iterable, List
from sqlalchemy import select
from sqlalchemy.orm import Session

from kinetic_fluid.models import SimulationRun, DiagnosticsRow, PicardResultRow
from kinetic_fluid.schemas.records import DiagnosticsRecord, PicardRow


class RecordManager:
    """Manager for the rows recorded by a run."""

    def __init__(self, session: Session):
        self.session = session

    def add_record(self, run: SimulationRun, record: DiagnosticsRecord, commit: bool = True) -> DiagnosticsRow:
        row = DiagnosticsRow(run_id=run.id, **record.model_dump())
        self.session.add(row)
        if commit:
            self.session.commit()
        return row

    def add_records(self, run: SimulationRun, records: Iterable[DiagnosticsRecord]) -> int:
        count = 0
        for record in records:
            self.add_record(run, record, commit=False)
            count += 1
        self.session.commit()
        return count

    def add_picard_row(self, run: SimulationRun, row: PicardRow) -> PicardResultRow:
        stored = PicardResultRow(run_id=run.id, **row.model_dump())
        self.session.add(stored)
        self.session.commit()
        return stored

    def get_records(self, run: SimulationRun) -> List[DiagnosticsRecord]:
        """Recorded diagnostics of a run in step order."""
        stmt = select(DiagnosticsRow).where(DiagnosticsRow.run_id == run.id).order_by(DiagnosticsRow.step)
        return [DiagnosticsRecord.model_validate(r, from_attributes=True) for r in self.session.execute(stmt).scalars()]

    def get_picard_rows(self, run: SimulationRun) -> List[PicardRow]:
        stmt = select(PicardResultRow).where(PicardResultRow.run_id == run.id).order_by(PicardResultRow.iteration)
        return [PicardRow.model_validate(r, from_attributes=True) for r in self.session.execute(stmt).scalars()]
