import json
import sqlite3
from typing import Dict, List, Optional


class RunStore:
    """Append-only sqlite history of solve reports"""

    def __init__(self, db_path: str = "rydsat_runs.db"):
        self.db_path = db_path
        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                fingerprint TEXT,
                cnf_name TEXT,
                verdict TEXT,
                solution_mass REAL,
                created_at TEXT,
                report_json TEXT
            )
        """)
        self.conn.commit()

    def add_run(self, report: Dict) -> int:
        verdict = report.get("verdict", {})
        cur = self.conn.execute(
            "INSERT INTO runs (fingerprint, cnf_name, verdict, solution_mass, created_at, report_json) "
            "VALUES (?, ?, ?, ?, datetime('now'), ?)",
            (
                report.get("fingerprint"),
                report.get("input"),
                "SAT" if verdict.get("satisfiable") else "UNSAT",
                verdict.get("solution_mass"),
                json.dumps(report, sort_keys=True),
            ),
        )
        self.conn.commit()
        return int(cur.lastrowid)

    def list_runs(self, limit: int = 20) -> List[Dict]:
        cur = self.conn.execute(
            "SELECT id, fingerprint, cnf_name, verdict, solution_mass, created_at FROM runs ORDER BY id DESC LIMIT ?",
            (limit,),
        )
        return [
            dict(id=row[0], fingerprint=row[1], cnf_name=row[2], verdict=row[3], solution_mass=row[4], created_at=row[5])
            for row in cur.fetchall()
        ]

    def get_run(self, run_id: int) -> Optional[Dict]:
        cur = self.conn.execute("SELECT report_json, created_at FROM runs WHERE id = ?", (run_id,))
        row = cur.fetchone()
        if row is None:
            return None
        return dict(id=run_id, created_at=row[1], report=json.loads(row[0]))

    def clear(self) -> None:
        self.conn.execute("DELETE FROM runs")
        self.conn.commit()

    def close(self) -> None:
        self.conn.close()
