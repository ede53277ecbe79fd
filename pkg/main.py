from dotenv import load_dotenv

load_dotenv(".env.dev")


# Entry point
def main() -> int:
    load_dotenv()
    from mtsp_cmsa.cli import main as cli_main

    return cli_main()


if __name__ == "__main__":
    raise SystemExit(main())
