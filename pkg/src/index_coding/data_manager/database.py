import sqlite3
import logging
from pathlib import Path

logger = logging.getLogger(__name__)


def initialize_db(db_file: str | Path) -> bool:
    try:
        Path(db_file).parent.mkdir(parents=True, exist_ok=True)
        with sqlite3.connect(db_file) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                CREATE TABLE IF NOT EXISTS sim_runs (
                    run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    lambda REAL NOT NULL,
                    algorithm TEXT NOT NULL,
                    seed INTEGER NOT NULL,
                    frames INTEGER NOT NULL,
                    total_avg_backlog REAL,
                    max_qr_ratio REAL, -- aggregate Q[R]/R, same value as the CSV column
                    wasted INTEGER,
                    verdict TEXT,
                    created_date TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            ''')
            cursor.execute("CREATE INDEX IF NOT EXISTS idx_sim_runs_algorithm ON sim_runs(algorithm, lambda)")
            conn.commit()
            logger.debug(f"Database: хранилище запусков готово: {db_file}")
            return True
    except sqlite3.Error as e:
        logger.error(f"Database: не удалось инициализировать {db_file}: {e}", exc_info=True)
        return False


def record_run(db_file: str | Path, stats) -> bool:
    try:
        with sqlite3.connect(db_file) as conn:
            cursor = conn.cursor()
            cursor.execute(
                """
                INSERT INTO sim_runs (lambda, algorithm, seed, frames, total_avg_backlog, max_qr_ratio, wasted, verdict)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    float(stats.rate),
                    stats.algorithm,
                    int(stats.seed),
                    int(stats.frames),
                    float(stats.total_avg_backlog),
                    float(stats.total_qr_ratio),
                    int(stats.wasted),
                    stats.verdict,
                ),
            )
            conn.commit()
            return True
    except sqlite3.Error as e:
        logger.error(f"Database: не удалось записать запуск {stats.algorithm} при нагрузке {stats.rate}: {e}", exc_info=True)
        return False


def get_runs(db_file: str | Path, algorithm: str | None = None) -> list[dict]:
    try:
        with sqlite3.connect(db_file) as conn:
            conn.row_factory = sqlite3.Row
            cursor = conn.cursor()
            if algorithm:
                cursor.execute(
                    "SELECT * FROM sim_runs WHERE algorithm = ? ORDER BY lambda, seed, run_id", (algorithm,)
                )
            else:
                cursor.execute("SELECT * FROM sim_runs ORDER BY algorithm, lambda, seed, run_id")
            return [dict(row) for row in cursor.fetchall()]
    except sqlite3.Error as e:
        logger.error(f"Database: не удалось прочитать запуски из {db_file}: {e}")
        return []
